use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{DmaError, Result};
use crate::linalg::{hermitize, re_inner, solve_hpd, CMat, CVec};
use crate::model::{ChannelRealization, SystemConfig};
use crate::quantizer::{combined_channel, BussgangStats};
use crate::scalar::{cr, czero, j, Real, C};
use crate::sdp::{extract_rank_one, solve_sdp, Extraction, SdpOptions, SdpProblem, SdpSolution};

use super::AnalogCombiner;

/// Quadratic surrogate `2 Re(ξ† q) − q† Ψ q + offset` of the transformed
/// objective at a fixed auxiliary matrix Φ.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T: Real> {
    pub xi: CVec<T>,
    pub psi: CMat<T>,
    /// N_v × K auxiliary matrix.
    pub phi: CMat<T>,
    /// `Γ_av A H H† A† + A A†`.
    pub upsilon: CMat<T>,
    /// `−tr(Φ† C_g Φ) / σ_n²`, independent of `q`.
    pub offset: T,
    pub microstrips: usize,
    pub elements_per_microstrip: usize,
}

impl<T: Real> QuadraticForm<T> {
    /// Objective at stacked `q`.
    pub fn objective(&self, q: &CVec<T>) -> T {
        let lin = re_inner(&self.xi, q);
        let quad = re_inner(q, &(&self.psi * q));
        lin + lin - quad + self.offset
    }

    /// Objective over unimodular `u`: `Re((2ξ + jΨ1)† u) − ½ u† Ψ u`.
    /// Equals `2 · objective(½(u − j1))` up to a `u`-independent constant.
    pub fn unimodular_objective(&self, u: &[C<T>]) -> T {
        let n = self.xi.len();
        let u = CVec::from_column_slice(u);
        let ones = CVec::from_element(n, cr(T::one()));
        let link = &self.xi * cr(T::lit(2.0)) + &self.psi * ones * j::<T>();
        re_inner(&link, &u) - re_inner(&u, &(&self.psi * &u)) * T::lit(0.5)
    }
}

/// `Γ_av A H H† A† + A A†`.
pub fn upsilon<T: Real>(channel: &ChannelRealization<T>, config: &SystemConfig<T>) -> CMat<T> {
    let ah = channel.ah();
    let mut ups = &ah * ah.adjoint() * cr(config.gamma_av());
    for (m, a) in channel.a.iter().enumerate() {
        ups[(m, m)] += cr(a.norm_sqr());
    }
    hermitize(&ups)
}

/// Builds `(ξ, Ψ)` from the current combiner and its statistics.
///
/// `Φ = Γ (F Q Υ Q† F† + C_g/σ²)⁻¹ F Q A H`; with `G = F† Φ`,
/// `ξ_m = Γ Σ_k [AH]_{m,k} conj(G_{i(m),k})` and
/// `Ψ_{m,m'} = Υ_{m,m'} [G G†]_{i(m'),i(m)}`, i.e. the Hadamard form of
/// `B† (Σ_k F Φ_k* Φ_kᵀ F ⊗ Υ) B`.
pub fn quadratic_form<T: Real>(
    channel: &ChannelRealization<T>,
    config: &SystemConfig<T>,
    q_prev: &AnalogCombiner<T>,
    stats: &BussgangStats<T>,
) -> Result<QuadraticForm<T>> {
    let gamma = config.gamma_av();
    let sigma2 = config.noise_variance();
    let nv = config.microstrips();
    let ne = config.elements_per_microstrip();
    let n = config.elements();
    let k = config.users();

    let ups = upsilon(channel, config);
    let (m0, gain) = combined_channel(channel, q_prev);
    let mut q_ups_qh = &m0 * m0.adjoint() * cr(gamma);
    for i in 0..nv {
        q_ups_qh[(i, i)] += cr(gain[i]);
    }
    let f = &stats.f_b;
    let inner = f * q_ups_qh * f.adjoint() + &stats.c_g / cr(sigma2);
    let fm = f * &m0;
    let phi = solve_hpd(&inner, &fm, T::lit(1e12), T::lit(1e-10))
        .map_err(|e| DmaError::numerical(format!("transformed-objective inner matrix: {e}")))?
        * cr(gamma);
    let g = f.adjoint() * &phi;
    let ah = channel.ah();
    let xi = CVec::from_fn(n, |m, _| {
        let i = m / ne;
        (0..k).fold(czero::<T>(), |acc, kk| acc + ah[(m, kk)] * g[(i, kk)].conj()) * cr(gamma)
    });
    let p = &g * g.adjoint();
    let psi = hermitize(&DMatrix::from_fn(n, n, |m, mp| ups[(m, mp)] * p[(mp / ne, m / ne)]));
    let offset = -re_inner(&phi, &(&stats.c_g * &phi)) / sigma2;
    Ok(QuadraticForm {
        xi,
        psi,
        phi,
        upsilon: ups,
        offset,
        microstrips: nv,
        elements_per_microstrip: ne,
    })
}

/// Outcome of one analog update.
#[derive(Debug, Clone)]
pub struct AnalogUpdate<T: Real> {
    pub combiner: AnalogCombiner<T>,
    pub solution: SdpSolution<T>,
    pub extraction: Extraction<T>,
}

/// Maximizes the unimodular objective through the semidefinite relaxation
/// and Gaussian randomization, then maps `u` back to Lorentzian weights.
/// The caller decides whether to accept the candidate.
pub fn update_analog<T: Real, R: Rng + ?Sized>(
    form: &QuadraticForm<T>,
    sdp: &SdpOptions,
    randomizations: usize,
    warm_start: Option<&CMat<T>>,
    rng: &mut R,
) -> Result<AnalogUpdate<T>> {
    let problem = SdpProblem::from_quadratic(&form.xi, &form.psi)?;
    let solution = solve_sdp(&problem, sdp, warm_start)?;
    let extraction = extract_rank_one(&problem, &solution.factor, randomizations, rng);
    let combiner = AnalogCombiner::from_unimodular(
        form.microstrips,
        form.elements_per_microstrip,
        &extraction.u,
    )?;
    Ok(AnalogUpdate {
        combiner,
        solution,
        extraction,
    })
}
