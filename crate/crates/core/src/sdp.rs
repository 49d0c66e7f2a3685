//! Diagonal-constrained semidefinite relaxation
//! `max tr(U V)  s.t.  diag(U) = 1, U ⪰ 0`
//! and Gaussian-randomization extraction of a unimodular vector.
//!
//! Two first-order solvers are provided. [`SdpMethod::LowRank`] runs block
//! coordinate ascent on a unit-column factor `U = Y† Y` (feasible at every
//! step). [`SdpMethod::Admm`] alternates between the unit-diagonal affine set
//! and the PSD cone (eigenvalue clipping) with over-relaxation and residual
//! balancing. Both report a dual upper bound built from `diag(V U)` so the
//! optimality gap of every returned solution is known.

use nalgebra::{ComplexField, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DmaError, Result};
use crate::linalg::{hermitian_defect, hermitize, is_finite, min_eigenvalue, re_inner, CMat, CVec};
use crate::scalar::{cr, czero, j, Real, C};
use crate::seed::{complex_normal, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpMethod {
    /// Block coordinate ascent on a low-rank factor of `U`.
    LowRank,
    /// Splitting between the PSD cone and the unit-diagonal set.
    Admm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdpOptions {
    pub method: SdpMethod,
    pub max_iter: usize,
    /// Residual target.
    pub tolerance: f64,
    /// The low-rank solver also stops once the certified relative duality
    /// gap falls below this (checked every few sweeps).
    pub gap_tolerance: f64,
    /// Factor rank for [`SdpMethod::LowRank`]; defaults to `⌈√(2n)⌉ + 1`.
    pub rank: Option<usize>,
    /// Seed for the random initial factor.
    pub seed: u64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            method: SdpMethod::LowRank,
            max_iter: 5000,
            tolerance: 1e-6,
            gap_tolerance: 1e-8,
            rank: None,
            seed: 0x5d9_u64,
        }
    }
}

/// `V` of the lifted problem, `(N+1) × (N+1)` Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem<T: Real> {
    v: CMat<T>,
}

impl<T: Real> SdpProblem<T> {
    /// Validates and symmetrizes an arbitrary `V`.
    pub fn new(v: CMat<T>) -> Result<Self> {
        if !v.is_square() || v.nrows() < 2 {
            return Err(DmaError::invalid("V must be square with dimension at least 2"));
        }
        if !is_finite(&v) {
            return Err(DmaError::numerical("V has non-finite entries"));
        }
        let scale = v.norm().max(T::one());
        if hermitian_defect(&v) > T::lit(1e-10) * scale {
            return Err(DmaError::invalid("V is not Hermitian"));
        }
        Ok(Self { v: hermitize(&v) })
    }

    /// `V = ½ [[−Ψ, 2ξ + jΨ1], [(2ξ + jΨ1)†, 0]]`.
    pub fn from_quadratic(xi: &CVec<T>, psi: &CMat<T>) -> Result<Self> {
        let n = xi.len();
        if psi.nrows() != n || psi.ncols() != n {
            return Err(DmaError::invalid("ξ and Ψ dimensions disagree"));
        }
        let half = cr(T::lit(0.5));
        let link = xi * cr(T::lit(2.0)) + psi * CVec::from_element(n, cr(T::one())) * j::<T>();
        let mut v = DMatrix::from_element(n + 1, n + 1, czero());
        for col in 0..n {
            for row in 0..n {
                v[(row, col)] = -psi[(row, col)] * half;
            }
            v[(col, n)] = link[col] * half;
            v[(n, col)] = link[col].conj() * half;
        }
        Self::new(v)
    }

    pub fn v(&self) -> &CMat<T> {
        &self.v
    }

    /// Size of the lifted matrix, `N + 1`.
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// `tr(U V)` for Hermitian `U`.
    pub fn objective(&self, u: &CMat<T>) -> T {
        re_inner(&self.v, u)
    }

    /// `[u; 1]† V [u; 1]`, which equals `Re((2ξ + jΨ1)† u) − ½ u†Ψu`.
    pub fn rank_one_objective(&self, u: &[C<T>]) -> T {
        let n = self.dim();
        debug_assert_eq!(u.len() + 1, n);
        let x = |i: usize| if i + 1 == n { cr(T::one()) } else { u[i] };
        let mut total = czero::<T>();
        for col in 0..n {
            let xc = x(col);
            let column = self.v.column(col);
            let mut acc = czero::<T>();
            for (row, vr) in column.iter().enumerate() {
                acc += x(row).conj() * *vr;
            }
            total += acc * xc;
        }
        total.re
    }

    /// Upper bound on the optimum from the dual candidate `y = Re diag(V U)`,
    /// shifted to dual feasibility.
    pub fn dual_bound(&self, u: &CMat<T>) -> T {
        let n = self.dim();
        let vu = &self.v * u;
        let mut s = -self.v.clone();
        let mut total = T::zero();
        for i in 0..n {
            let y = vu[(i, i)].re;
            s[(i, i)] += cr(y);
            total += y;
        }
        let shift = (-min_eigenvalue(&s)).max(T::zero());
        total + shift * T::from_usize(n).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    pub converged: bool,
    /// Final stationarity (low-rank) or primal/dual (ADMM) residual.
    pub residual: f64,
    /// `‖diag(U) − 1‖_∞`.
    pub diag_residual: f64,
    pub min_eigenvalue: f64,
    /// Dual bound minus attained objective.
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T: Real> {
    /// Unit-diagonal PSD solution.
    pub u: CMat<T>,
    /// `r × (N+1)` factor with `U = factor† · factor`.
    pub factor: CMat<T>,
    pub objective: T,
    pub upper_bound: T,
    pub stats: SolverStats,
}

/// Rank-one candidate picked from an SDP solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction<T: Real> {
    /// Unimodular length-N vector.
    pub u: Vec<C<T>>,
    /// `[u; 1]† V [u; 1]`.
    pub objective: T,
    /// `None` for the leading-eigenvector candidate, otherwise the draw index.
    pub draw: Option<usize>,
}

pub fn solve_sdp<T: Real>(
    problem: &SdpProblem<T>,
    options: &SdpOptions,
    warm_start: Option<&CMat<T>>,
) -> Result<SdpSolution<T>> {
    let (factor, iterations, converged, residual) = match options.method {
        SdpMethod::LowRank => low_rank_ascent(problem, options, warm_start),
        SdpMethod::Admm => admm(problem, options, warm_start)?,
    };
    let u = hermitize(&(factor.adjoint() * &factor));
    if !is_finite(&u) {
        return Err(DmaError::numerical("SDP iterate diverged"));
    }
    let objective = problem.objective(&u);
    let upper_bound = problem.dual_bound(&u);
    let diag_residual = u
        .diagonal()
        .iter()
        .map(|d| (d.re - T::one()).abs().to_f64_lossy().max(d.im.abs().to_f64_lossy()))
        .fold(0.0, f64::max);
    let min_eig = min_eigenvalue(&u).to_f64_lossy();
    Ok(SdpSolution {
        stats: SolverStats {
            iterations,
            converged,
            residual,
            diag_residual,
            min_eigenvalue: min_eig,
            duality_gap: (upper_bound - objective).to_f64_lossy(),
        },
        u,
        factor,
        objective,
        upper_bound,
    })
}

fn default_rank(n: usize) -> usize {
    (((2 * n) as f64).sqrt().ceil() as usize + 1).min(n)
}

fn normalize_columns<T: Real>(y: &mut CMat<T>) {
    for mut col in y.column_iter_mut() {
        let norm = col.norm();
        if norm > T::zero() {
            col /= cr(norm);
        } else {
            col.fill(czero());
            col[0] = cr(T::one());
        }
    }
}

const GAP_CHECK_EVERY: usize = 25;

fn low_rank_ascent<T: Real>(
    problem: &SdpProblem<T>,
    options: &SdpOptions,
    warm_start: Option<&CMat<T>>,
) -> (CMat<T>, usize, bool, f64) {
    let n = problem.dim();
    let v = problem.v();
    let mut y = match warm_start {
        Some(w) if w.ncols() == n && w.nrows() >= 1 => w.clone(),
        _ => {
            let r = options.rank.unwrap_or_else(|| default_rank(n)).clamp(1, n);
            let mut rng = rng_from_seed(options.seed);
            DMatrix::from_fn(r, n, |_, _| complex_normal(&mut rng, 1.0))
        }
    };
    normalize_columns(&mut y);
    let r = y.nrows();
    let tol = options.tolerance;
    let mut g = vec![czero::<T>(); r];
    let mut residual = f64::INFINITY;
    for sweep in 1..=options.max_iter {
        let mut worst = T::zero();
        for i in 0..n {
            g.iter_mut().for_each(|x| *x = czero());
            let vcol = v.column(i);
            for jdx in 0..n {
                if jdx == i {
                    continue;
                }
                let coef = vcol[jdx];
                let yj = y.column(jdx);
                for (acc, yv) in g.iter_mut().zip(yj.iter()) {
                    *acc += *yv * coef;
                }
            }
            let norm = g.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
            if !(norm > T::zero()) {
                continue;
            }
            let mut delta = T::zero();
            let mut yi = y.column_mut(i);
            for (dst, src) in yi.iter_mut().zip(g.iter()) {
                let new = *src / cr(norm);
                delta += (new - *dst).norm_sqr();
                *dst = new;
            }
            worst = worst.max(delta.sqrt());
        }
        residual = worst.to_f64_lossy();
        if residual < tol {
            return (y, sweep, true, residual);
        }
        if sweep % GAP_CHECK_EVERY == 0 {
            let u = hermitize(&(y.adjoint() * &y));
            let obj = problem.objective(&u);
            let gap = (problem.dual_bound(&u) - obj).to_f64_lossy();
            if gap <= options.gap_tolerance * obj.abs().to_f64_lossy().max(1.0) {
                return (y, sweep, true, residual);
            }
        }
    }
    (y, options.max_iter, false, residual)
}

/// Eigen-factor of the PSD projection: rows `√λ_k v_k†` for `λ_k > 0`.
fn psd_factor<T: Real>(m: &CMat<T>) -> CMat<T> {
    let eig = hermitize(m).symmetric_eigen();
    let n = m.nrows();
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > T::zero()).collect();
    if keep.is_empty() {
        return DMatrix::from_element(1, n, czero());
    }
    DMatrix::from_fn(keep.len(), n, |row, col| {
        let k = keep[row];
        eig.eigenvectors[(col, k)].conj() * cr(eig.eigenvalues[k].sqrt())
    })
}

fn admm<T: Real>(
    problem: &SdpProblem<T>,
    options: &SdpOptions,
    warm_start: Option<&CMat<T>>,
) -> Result<(CMat<T>, usize, bool, f64)> {
    let n = problem.dim();
    let v = problem.v();
    let relax = T::lit(1.6);
    let mut z = match warm_start {
        Some(f) if f.ncols() == n => hermitize(&(f.adjoint() * f)),
        _ => CMat::<T>::identity(n, n),
    };
    let mut dual = CMat::<T>::zeros(n, n);
    let scale = (v.norm() / T::from_usize(n).unwrap()).max(T::lit(1e-12));
    let mut rho = scale;
    let tol = T::lit(options.tolerance);
    let sqrt_n = T::from_usize(n).unwrap().sqrt();
    let mut residual = f64::INFINITY;
    let mut factor = psd_factor(&z);
    for it in 1..=options.max_iter {
        let mut x = &z - &dual + v / cr(rho);
        for i in 0..n {
            x[(i, i)] = cr(T::one());
        }
        let x_hat = &x * cr(relax) + &z * cr(T::one() - relax);
        factor = psd_factor(&(&x_hat + &dual));
        let z_new = hermitize(&(factor.adjoint() * &factor));
        dual += &x_hat - &z_new;
        let primal = (&x - &z_new).norm();
        let dual_res = (&z_new - &z).norm() * rho / scale;
        z = z_new;
        if !is_finite(&z) {
            return Err(DmaError::numerical("ADMM iterate diverged"));
        }
        if !(primal.is_finite() && dual_res.is_finite()) {
            return Err(DmaError::numerical("ADMM residual is not finite"));
        }
        residual = primal.max(dual_res).to_f64_lossy();
        if primal < tol * sqrt_n && dual_res < tol * sqrt_n {
            return Ok((unit_diagonal_factor(factor), it, true, residual));
        }
        let ten = T::lit(10.0);
        if primal > ten * dual_res {
            rho *= T::lit(2.0);
            dual *= cr(T::lit(0.5));
        } else if dual_res > ten * primal {
            rho *= T::lit(0.5);
            dual *= cr(T::lit(2.0));
        }
    }
    Ok((unit_diagonal_factor(factor), options.max_iter, false, residual))
}

/// Rescales factor columns to unit norm, i.e. `D^{-1/2} U D^{-1/2}`.
fn unit_diagonal_factor<T: Real>(mut f: CMat<T>) -> CMat<T> {
    normalize_columns(&mut f);
    f
}

fn candidate_from<T: Real>(x: &CVec<T>) -> Option<Vec<C<T>>> {
    let n = x.len();
    let last = x[n - 1];
    let mag = last.modulus();
    if !(mag > T::zero()) {
        return None;
    }
    let rot = last.conj() / cr(mag);
    Some(
        x.iter()
            .take(n - 1)
            .map(|&xi| {
                let z = xi * rot;
                let m = z.modulus();
                if m > T::zero() {
                    z / cr(m)
                } else {
                    cr(T::one())
                }
            })
            .collect(),
    )
}

/// Gaussian randomization on the factor of `U`, plus the leading-eigenvector
/// candidate. Ties go to the eigenvector, then to the lowest draw index.
pub fn extract_rank_one<T: Real, R: Rng + ?Sized>(
    problem: &SdpProblem<T>,
    factor: &CMat<T>,
    count: usize,
    rng: &mut R,
) -> Extraction<T> {
    let n = problem.dim();
    let r = factor.nrows();
    let mut best: Option<Extraction<T>> = None;
    let mut consider = |u: Vec<C<T>>, draw: Option<usize>| {
        let objective = problem.rank_one_objective(&u);
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(Extraction { u, objective, draw });
        }
    };

    let gram = factor * factor.adjoint();
    let eig = hermitize(&gram).symmetric_eigen();
    let lead = (0..r)
        .max_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let lead_vec = factor.adjoint() * eig.eigenvectors.column(lead);
    if let Some(u) = candidate_from(&lead_vec) {
        consider(u, None);
    }
    for draw in 0..count {
        let zeta = DVector::from_fn(r, |_, _| complex_normal::<T, _>(rng, 1.0));
        let x = factor.adjoint() * zeta;
        if let Some(u) = candidate_from(&x) {
            consider(u, Some(draw));
        }
    }
    best.unwrap_or_else(|| {
        let u = vec![cr(T::one()); n - 1];
        let objective = problem.rank_one_objective(&u);
        Extraction { u, objective, draw: None }
    })
}

/// Extraction for an arbitrary unit-diagonal PSD `U` (factored first).
pub fn extract_rank_one_from_gram<T: Real, R: Rng + ?Sized>(
    problem: &SdpProblem<T>,
    u: &CMat<T>,
    count: usize,
    rng: &mut R,
) -> Extraction<T> {
    extract_rank_one(problem, &psd_factor(u), count, rng)
}

/// Lifts a unimodular vector to `[u; 1][u; 1]†`.
pub fn lift<T: Real>(u: &[C<T>]) -> CMat<T> {
    let x = CVec::from_iterator(u.len() + 1, u.iter().copied().chain([cr(T::one())]));
    &x * x.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cis as unit;
    use crate::seed::uniform_phase;

    fn random_hermitian(n: usize, seed: u64) -> CMat<f64> {
        let mut rng = rng_from_seed(seed);
        let a = DMatrix::from_fn(n, n, |_, _| complex_normal::<f64, _>(&mut rng, 1.0));
        hermitize(&(&a + a.adjoint()))
    }

    fn random_unimodular(n: usize, rng: &mut crate::seed::SimRng) -> Vec<C<f64>> {
        (0..n).map(|_| unit(uniform_phase::<f64, _>(rng))).collect()
    }

    #[test]
    fn zero_objective_is_feasible() {
        let p = SdpProblem::new(CMat::<f64>::zeros(4, 4)).unwrap();
        for method in [SdpMethod::LowRank, SdpMethod::Admm] {
            let opts = SdpOptions { method, ..Default::default() };
            let s = solve_sdp(&p, &opts, None).unwrap();
            assert!(s.stats.diag_residual < 1e-6);
            assert!(s.stats.min_eigenvalue > -1e-8);
            assert_eq!(s.objective, 0.0);
        }
    }

    #[test]
    fn diagonal_objective_is_constant() {
        let v = DMatrix::from_diagonal(&DVector::from_vec(vec![cr(1.5), cr(-2.0), cr(0.25)]));
        let p = SdpProblem::new(v).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default(), None).unwrap();
        assert!((s.objective - (-0.25)).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut v = CMat::<f64>::zeros(3, 3);
        v[(0, 1)] = cr(1.0);
        assert!(SdpProblem::new(v).is_err());
    }

    #[test]
    fn solvers_agree_and_are_certified() {
        for seed in 0..5 {
            let p = SdpProblem::new(random_hermitian(9, seed)).unwrap();
            let lr = solve_sdp(&p, &SdpOptions::default(), None).unwrap();
            let ad = solve_sdp(
                &p,
                &SdpOptions { method: SdpMethod::Admm, ..Default::default() },
                None,
            )
            .unwrap();
            assert!(lr.stats.converged && ad.stats.converged, "{:?} {:?}", lr.stats, ad.stats);
            let scale = lr.objective.abs().max(1.0);
            assert!((lr.objective - ad.objective).abs() < 1e-4 * scale, "{} {}", lr.objective, ad.objective);
            assert!(lr.stats.duality_gap < 1e-4 * scale, "{:?}", lr.stats);
            assert!(ad.stats.duality_gap < 1e-4 * scale, "{:?}", ad.stats);
            for s in [&lr, &ad] {
                assert!(s.stats.diag_residual < 1e-6);
                assert!(s.stats.min_eigenvalue > -1e-8);
            }
        }
    }

    #[test]
    fn relaxation_dominates_rank_one_points() {
        let mut rng = rng_from_seed(3);
        for seed in 10..13 {
            let p = SdpProblem::new(random_hermitian(7, seed)).unwrap();
            let s = solve_sdp(&p, &SdpOptions::default(), None).unwrap();
            for _ in 0..100 {
                let u = random_unimodular(6, &mut rng);
                assert!(p.objective(&lift(&u)) <= s.objective + 1e-6);
            }
            let ex = extract_rank_one(&p, &s.factor, 50, &mut rng);
            assert!(ex.objective <= s.objective + 1e-6);
            assert!(ex.u.iter().all(|z| (z.modulus() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn rank_one_objective_matches_trace() {
        let mut rng = rng_from_seed(8);
        let p = SdpProblem::new(random_hermitian(6, 2)).unwrap();
        let u = random_unimodular(5, &mut rng);
        assert!((p.rank_one_objective(&u) - p.objective(&lift(&u))).abs() < 1e-12);
    }

    #[test]
    fn exact_rank_one_is_recovered() {
        let mut rng = rng_from_seed(4);
        let u = random_unimodular(5, &mut rng);
        let x = CVec::<f64>::from_iterator(6, u.iter().copied().chain([cr(1.0)]));
        // V = x x† makes the lifted point the unique optimum.
        let p = SdpProblem::new(&x * x.adjoint()).unwrap();
        let ex = extract_rank_one_from_gram(&p, &lift(&u), 10, &mut rng);
        for (a, b) in ex.u.iter().zip(u.iter()) {
            assert!((a - b).modulus() < 1e-10);
        }
        assert!((ex.objective - p.rank_one_objective(&u)).abs() < 1e-9);
    }

    #[test]
    fn extraction_is_deterministic() {
        let p = SdpProblem::new(random_hermitian(8, 21)).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default(), None).unwrap();
        let a = extract_rank_one(&p, &s.factor, 40, &mut rng_from_seed(5));
        let b = extract_rank_one(&p, &s.factor, 40, &mut rng_from_seed(5));
        assert_eq!(a, b);
    }
}
