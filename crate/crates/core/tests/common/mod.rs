//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use dma_core::design::{analytic_mse, digital_combiner, AnalogCombiner};
use dma_core::linalg::{min_eigenvalue, CMat, CVec};
use dma_core::model::{ChannelRealization, SystemConfig};
use dma_core::quantizer::{bussgang_stats, QuantizerSpec, StatsMode};
use dma_core::seed::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;

pub fn cn(rng: &mut impl Rng, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMat<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(rows, cols, |_, _| cn(&mut rng, 1.0))
}

pub fn random_hermitian(n: usize, seed: u64) -> CMat<f64> {
    let b = random_matrix(n, n, seed);
    (&b + b.adjoint()) * C64::new(0.5, 0.0)
}

fn inner(a: &CMat<f64>, b: &CMat<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Minimizes `c − 2 Re tr(W† C_zs) + tr(W† C_z W)` by conjugate gradient on
/// the stacked real problem. Uses only matrix products.
pub fn lmmse_by_cg(c_z: &CMat<f64>, c_zs: &CMat<f64>, iters: usize) -> CMat<f64> {
    let mut w = CMat::<f64>::zeros(c_zs.nrows(), c_zs.ncols());
    // residual = −½ gradient = C_zs − C_z W
    let mut r = c_zs - c_z * &w;
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    for _ in 0..iters {
        if rr < 1e-30 {
            break;
        }
        let ap = c_z * &p;
        let alpha = rr / inner(&p, &ap);
        w += &p * C64::new(alpha, 0.0);
        r -= &ap * C64::new(alpha, 0.0);
        let rr_new = inner(&r, &r);
        p = &r + &p * C64::new(rr_new / rr, 0.0);
        rr = rr_new;
    }
    w
}

pub fn mse_objective(c_z: &CMat<f64>, c_zs: &CMat<f64>, trace_cs: f64, w: &CMat<f64>) -> f64 {
    trace_cs - 2.0 * inner(w, c_zs) + inner(w, &(c_z * w))
}

/// Dense `Q` (N_v × N) with `vec(Q†) = B q`.
pub fn q_matrix(q: &CVec<f64>, nv: usize, ne: usize) -> CMat<f64> {
    let mut m = CMat::<f64>::zeros(nv, nv * ne);
    for i in 0..nv {
        for l in 0..ne {
            m[(i, i * ne + l)] = q[i * ne + l].conj();
        }
    }
    m
}

/// Transformed objective at fixed Φ, evaluated with dense matrices:
/// `2Γ Re tr((F Q A H)† Φ) − tr(Φ† (F Q Υ Q† F† + C_g/σ²) Φ)`.
pub fn transformed_objective(
    channel: &ChannelRealization<f64>,
    config: &SystemConfig<f64>,
    f_b: &CMat<f64>,
    c_g: &CMat<f64>,
    phi: &CMat<f64>,
    q: &CMat<f64>,
) -> f64 {
    let g = config.gamma_av();
    let s2 = config.noise_variance();
    let a = channel.a_matrix();
    let h = &channel.h;
    let ups = a.clone() * h * h.adjoint() * a.adjoint() * C64::new(g, 0.0) + &a * a.adjoint();
    let fqah = f_b * q * &a * h;
    let mid = f_b * q * ups * q.adjoint() * f_b.adjoint() + c_g / C64::new(s2, 0.0);
    2.0 * g * inner(&fqah, phi) - inner(phi, &(mid * phi))
}

/// Optimum of `max tr(UV) s.t. diag(U) = 1, U ⪰ 0` from the dual
/// `min Σ y s.t. Diag(y) − V ⪰ 0`. The last dual variable is eliminated via
/// the Schur complement and the remaining convex function is minimized by
/// damped Newton steps.
pub fn sdp_dual_optimum(v: &CMat<f64>) -> f64 {
    let n = v.nrows();
    if n == 1 {
        return v[(0, 0)].re;
    }
    let m = n - 1;
    let c = v.view((0, m), (m, 1)).into_owned();
    let v11 = v.view((0, 0), (m, m)).into_owned();
    let corner = v[(m, m)].re;
    let eval = |y: &DVector<f64>| -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let mut d = -v11.clone();
        for i in 0..m {
            d[(i, i)] += C64::new(y[i], 0.0);
        }
        // complex Cholesky does not reject indefinite input on its own
        if min_eigenvalue(&d) <= 0.0 {
            return None;
        }
        let chol = d.clone().cholesky()?;
        let x = chol.solve(&c);
        let dinv = chol.inverse();
        let val = y.sum() + corner + (c.adjoint() * &x)[(0, 0)].re;
        let grad = DVector::from_fn(m, |i, _| 1.0 - x[i].norm_sqr());
        let hess = DMatrix::from_fn(m, m, |i, j| 2.0 * (x[i] * x[j].conj() * dinv[(j, i)]).re);
        Some((val, grad, hess))
    };
    let scale: f64 = v.iter().map(|z| z.norm()).sum::<f64>() + 1.0;
    let mut y = DVector::from_element(m, scale);
    let (mut val, mut grad, mut hess) = eval(&y).expect("diagonally dominant start");
    for _ in 0..500 {
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => -&grad,
        };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-16 {
            let trial = &y + &step * t;
            if let Some((tv, tg, th)) = eval(&trial) {
                if tv <= val + 1e-4 * t * grad.dot(&step) {
                    y = trial;
                    val = tv;
                    grad = tg;
                    hess = th;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved || grad.norm() < 1e-13 * scale {
            break;
        }
    }
    val
}

/// `[u;1]† V [u;1]` for `u_i = e^{jθ_i}`.
pub fn rank_one_value(v: &CMat<f64>, theta: &[f64]) -> f64 {
    let n = v.nrows();
    let x = CVec::<f64>::from_fn(n, |i, _| if i + 1 == n { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, theta[i]) });
    (x.adjoint() * v * &x)[(0, 0)].re
}

/// Maximum of the rank-one value over a uniform phase grid with `points`
/// per dimension, polished by coordinate-wise golden-section search.
pub fn phase_grid_max(v: &CMat<f64>, points: usize) -> (f64, Vec<f64>) {
    let n = v.nrows() - 1;
    let step = std::f64::consts::TAU / points as f64;
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let total = points.pow(n as u32);
    let mut theta = vec![0.0; n];
    for idx in 0..total {
        let mut r = idx;
        for t in theta.iter_mut() {
            *t = (r % points) as f64 * step;
            r /= points;
        }
        let val = rank_one_value(v, &theta);
        if val > best.0 {
            best = (val, theta.clone());
        }
    }
    let mut theta = best.1.clone();
    for _ in 0..50 {
        for i in 0..n {
            let f = |t: f64| {
                let mut th = theta.clone();
                th[i] = t;
                -rank_one_value(v, &th)
            };
            theta[i] = golden(f, theta[i] - step, theta[i] + step, 1e-12);
        }
    }
    let val = rank_one_value(v, &theta);
    (val.max(best.0), theta)
}

pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Best analytic MSE (large-K statistics, optimal `W`) over random
/// Lorentzian combiners.
pub fn random_search_mse(
    channel: &ChannelRealization<f64>,
    config: &SystemConfig<f64>,
    spec: &QuantizerSpec<f64>,
    draws: usize,
    seed: u64,
) -> f64 {
    let mut rng = rng_from_seed(seed);
    (0..draws)
        .map(|_| {
            let q = AnalogCombiner::random(config.microstrips(), config.elements_per_microstrip(), &mut rng);
            let stats = bussgang_stats(channel, config, &q, spec, StatsMode::LargeK).unwrap();
            let w = digital_combiner(&stats).unwrap();
            analytic_mse(&stats, &w)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Monte Carlo `E[Q(y) y] / E[y²]` for `y ~ N(0, std²)`.
pub fn monte_carlo_gain(spec: &QuantizerSpec<f64>, std: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..samples {
        let g: f64 = rng.sample(StandardNormal);
        let y = std * g;
        num += spec.quantize(y) * y;
        den += y * y;
    }
    num / den
}
