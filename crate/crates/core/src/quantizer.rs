//! Uniform b-bit scalar quantizer and Bussgang-decomposition statistics.
//!
//! A [`QuantizerSpec`] stores thresholds and levels already scaled to its
//! `input_std`. Inside the receiver chain the same quantizer *shape* is
//! rescaled per RF chain to that chain's actual input standard deviation
//! (automatic gain control), so the Bussgang gain of every chain equals the
//! unit-variance gain of the shape.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::AnalogCombiner;
use crate::error::{DmaError, Result};
use crate::linalg::{is_finite, CMat};
use crate::model::{ChannelRealization, SystemConfig};
use crate::scalar::{c, cr, czero, Real};

/// Largest supported finite resolution.
pub const MAX_BITS: u32 = 12;

/// ADC resolution per real dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolution {
    Finite(u32),
    Infinite,
}

impl Resolution {
    pub fn bits(self) -> Option<u32> {
        match self {
            Resolution::Finite(b) => Some(b),
            Resolution::Infinite => None,
        }
    }

    /// Stable integer code used for seeding; `inf` maps to `u32::MAX`.
    pub fn code(self) -> u64 {
        match self {
            Resolution::Finite(b) => b as u64,
            Resolution::Infinite => u32::MAX as u64,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Finite(b) => write!(f, "{b}"),
            Resolution::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Resolution {
    type Err = DmaError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") {
            return Ok(Resolution::Infinite);
        }
        let b: u32 = s
            .parse()
            .map_err(|_| DmaError::invalid(format!("bad resolution `{s}`")))?;
        match b {
            0 => Err(DmaError::ZeroBits),
            b if b > MAX_BITS => Err(DmaError::invalid(format!(
                "resolution {b} exceeds the supported maximum of {MAX_BITS} bits"
            ))),
            b => Ok(Resolution::Finite(b)),
        }
    }
}

/// Which Bussgang model a [`BussgangStats`] was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatsMode {
    /// Per-chain diagonal Gaussian model evaluated at the true `diag(C_y)`.
    Exact,
    /// Large-K closed forms: `F_b = ρ_b I`, diagonal `C_g`.
    LargeK,
}

// ---------------------------------------------------------------------------
// Gaussian helpers (f64)

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        INV_SQRT_2PI * (-0.5 * x * x).exp()
    }
}

/// `P(a < X < b)` for standard normal X, evaluated from the tail nearest to
/// the interval to keep precision.
fn std_normal_mass(a: f64, b: f64) -> f64 {
    let sf = |x: f64| 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
    if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        sf(-b) - sf(-a)
    } else {
        1.0 - sf(-a) - sf(b)
    }
}

/// Mean-squared error of the unit-variance Gaussian through the mid-rise
/// uniform quantizer with `2^bits` levels and step `step`.
pub fn uniform_gaussian_distortion(bits: u32, step: f64) -> f64 {
    let n = 1usize << bits;
    let half = (n / 2) as f64;
    (0..n)
        .map(|i| {
            let lo = if i == 0 { f64::NEG_INFINITY } else { (i as f64 - half) * step };
            let hi = if i == n - 1 { f64::INFINITY } else { (i as f64 + 1.0 - half) * step };
            let level = (i as f64 - half + 0.5) * step;
            // ∫_lo^hi (x − ℓ)² φ(x) dx
            let mass = std_normal_mass(lo, hi);
            let xphi = |x: f64| if x.is_infinite() { 0.0 } else { x * std_normal_pdf(x) };
            let second = mass - (xphi(hi) - xphi(lo));
            let first = std_normal_pdf(lo) - std_normal_pdf(hi);
            second - 2.0 * level * first + level * level * mass
        })
        .sum()
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Minimum-MSE step of the uniform `bits`-bit quantizer for a unit-variance
/// Gaussian input. Computed once for every supported resolution.
pub fn optimal_uniform_step(bits: u32) -> Result<f64> {
    static STEPS: OnceLock<Vec<f64>> = OnceLock::new();
    if bits == 0 {
        return Err(DmaError::ZeroBits);
    }
    if bits > MAX_BITS {
        return Err(DmaError::invalid(format!("at most {MAX_BITS} bits supported")));
    }
    let steps = STEPS.get_or_init(|| {
        (1..=MAX_BITS)
            .map(|b| {
                let upper = 8.0 / (1u32 << (b - 1)) as f64;
                golden_section_min(|d| uniform_gaussian_distortion(b, d), 1e-4, upper, 1e-12)
            })
            .collect()
    });
    Ok(steps[bits as usize - 1])
}

// ---------------------------------------------------------------------------

/// b-bit mid-rise uniform quantizer for one real dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec<T: Real> {
    resolution: Resolution,
    /// `τ_0 = −∞ < τ_1 < … < τ_{2^b} = +∞`.
    thresholds: Vec<T>,
    /// `ℓ_0 < … < ℓ_{2^b − 1}`.
    levels: Vec<T>,
    step: T,
    input_std: T,
}

pub fn make_uniform_quantizer<T: Real>(
    resolution: Resolution,
    input_std: T,
) -> Result<QuantizerSpec<T>> {
    if !(input_std > T::zero()) {
        return Err(DmaError::invalid("quantizer input std must be positive"));
    }
    let bits = match resolution {
        Resolution::Infinite => {
            return Ok(QuantizerSpec {
                resolution,
                thresholds: Vec::new(),
                levels: Vec::new(),
                step: T::zero(),
                input_std,
            })
        }
        Resolution::Finite(b) => b,
    };
    let step = T::lit(optimal_uniform_step(bits)?) * input_std;
    let n = 1usize << bits;
    let half = (n / 2) as f64;
    let mut thresholds = Vec::with_capacity(n + 1);
    thresholds.push(-T::infinity());
    thresholds.extend((1..n).map(|i| T::lit(i as f64 - half) * step));
    thresholds.push(T::infinity());
    let levels = (0..n).map(|i| T::lit(i as f64 - half + 0.5) * step).collect();
    Ok(QuantizerSpec {
        resolution,
        thresholds,
        levels,
        step,
        input_std,
    })
}

impl<T: Real> QuantizerSpec<T> {
    pub fn resolution(&self) -> Resolution {
        self.resolution
    }
    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }
    pub fn levels(&self) -> &[T] {
        &self.levels
    }
    pub fn input_std(&self) -> T {
        self.input_std
    }
    pub fn step(&self) -> T {
        self.step
    }
    pub fn is_infinite(&self) -> bool {
        self.resolution == Resolution::Infinite
    }

    /// Same quantizer shape scaled to a new input standard deviation.
    pub fn rescaled(&self, input_std: T) -> Self {
        let r = input_std / self.input_std;
        Self {
            resolution: self.resolution,
            thresholds: self.thresholds.iter().map(|&t| t * r).collect(),
            levels: self.levels.iter().map(|&l| l * r).collect(),
            step: self.step * r,
            input_std,
        }
    }

    /// Quantizes one real sample. Odd symmetric: bins on the positive axis
    /// are closed at their lower edge and mirrored onto the negative axis.
    pub fn quantize(&self, x: T) -> T {
        if self.is_infinite() {
            return x;
        }
        let half = self.levels.len() / 2;
        let mag = x.abs();
        let bin = (mag / self.step).floor().to_usize().unwrap_or(usize::MAX).min(half - 1);
        let level = self.levels[half + bin];
        if x < T::zero() {
            -level
        } else {
            level
        }
    }

    /// `E[x Q(x)] / E[x²]` for `x ~ N(0, variance)`.
    pub fn bussgang_gain(&self, variance: T) -> T {
        if self.is_infinite() {
            return T::one();
        }
        let s = variance.to_f64_lossy().sqrt();
        let sum: f64 = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let a = self.thresholds[i].to_f64_lossy() / s;
                let b = self.thresholds[i + 1].to_f64_lossy() / s;
                l.to_f64_lossy() * (std_normal_pdf(a) - std_normal_pdf(b))
            })
            .sum();
        T::lit(sum / s)
    }

    /// `E[Q(x)²]` for `x ~ N(0, variance)`.
    pub fn output_power(&self, variance: T) -> T {
        if self.is_infinite() {
            return variance;
        }
        let s = variance.to_f64_lossy().sqrt();
        let sum: f64 = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let a = self.thresholds[i].to_f64_lossy() / s;
                let b = self.thresholds[i + 1].to_f64_lossy() / s;
                let l = l.to_f64_lossy();
                l * l * std_normal_mass(a, b)
            })
            .sum();
        T::lit(sum)
    }
}

/// Quantizes real and imaginary parts of every entry independently.
pub fn quantize_complex<T: Real>(spec: &QuantizerSpec<T>, y: &CMat<T>) -> CMat<T> {
    y.map(|z| c(spec.quantize(z.re), spec.quantize(z.im)))
}

/// Modeled large-K pre-quantization variance per RF chain,
/// `σ_n² · N_e (K Γ_av + 1) / 2`.
pub fn large_k_chain_variance<T: Real>(config: &SystemConfig<T>) -> T {
    let ne = T::from_usize(config.elements_per_microstrip()).unwrap();
    let k = T::from_usize(config.users()).unwrap();
    config.noise_variance() * ne * (k * config.gamma_av() + T::one()) / T::lit(2.0)
}

/// Closed-form large-K Bussgang gain.
///
/// The quantizer is rescaled to the modeled per-real-dimension standard
/// deviation `sqrt(N_e (K Γ + 1) / 4)` and the Gaussian gain sum is evaluated
/// with signed levels.
pub fn rho_b_closed_form<T: Real>(
    resolution: Resolution,
    elements_per_microstrip: usize,
    users: usize,
    gamma_av: T,
    spec: &QuantizerSpec<T>,
) -> Result<T> {
    if resolution == Resolution::Infinite || spec.is_infinite() {
        return Ok(T::one());
    }
    let denom = elements_per_microstrip as f64 * (users as f64 * gamma_av.to_f64_lossy() + 1.0);
    if !(denom.is_finite() && denom > 0.0) {
        return Err(DmaError::invalid("modeled chain variance must be positive"));
    }
    let scaled = spec.rescaled(T::lit((denom / 4.0).sqrt()));
    let coef = (2.0 / (std::f64::consts::PI * denom)).sqrt();
    let tail = |t: T| {
        let t = t.to_f64_lossy();
        if t.is_infinite() {
            0.0
        } else {
            (-2.0 * t * t / denom).exp()
        }
    };
    let rho: f64 = scaled
        .levels()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let l = l.to_f64_lossy();
            coef * l * (tail(scaled.thresholds()[i]) - tail(scaled.thresholds()[i + 1]))
        })
        .sum();
    Ok(T::lit(rho))
}

/// Second-order statistics of the quantized receiver chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BussgangStats<T: Real> {
    pub rho_b: T,
    /// N_v × N_v Bussgang gain matrix.
    pub f_b: CMat<T>,
    /// Distortion covariance.
    pub c_g: CMat<T>,
    /// Pre-quantization covariance.
    pub c_y: CMat<T>,
    /// Post-quantization covariance.
    pub c_z: CMat<T>,
    /// N_v × K cross-covariance `E[z s†]`.
    pub c_zs: CMat<T>,
    /// `P_s`, so that `C_s = P_s I_K`.
    pub transmit_power: T,
    pub mode: StatsMode,
}

impl<T: Real> BussgangStats<T> {
    pub fn users(&self) -> usize {
        self.c_zs.ncols()
    }

    /// `tr(C_s)`.
    pub fn signal_trace(&self) -> T {
        self.transmit_power * T::from_usize(self.users()).unwrap()
    }
}

/// `Q A H` (N_v × K) and the diagonal of `Q A A† Q†`.
pub(crate) fn combined_channel<T: Real>(
    channel: &ChannelRealization<T>,
    q: &AnalogCombiner<T>,
) -> (CMat<T>, DVector<T>) {
    let (nv, ne) = (q.microstrips(), q.elements_per_microstrip());
    let k = channel.users();
    let mut m = DMatrix::from_element(nv, k, czero());
    let mut gain = DVector::from_element(nv, T::zero());
    for i in 0..nv {
        for l in 0..ne {
            let idx = i * ne + l;
            let wa = q.weight(idx) * channel.a[idx];
            gain[i] += wa.norm_sqr();
            for kk in 0..k {
                m[(i, kk)] += wa * channel.h[(idx, kk)];
            }
        }
    }
    (m, gain)
}

pub fn bussgang_stats<T: Real>(
    channel: &ChannelRealization<T>,
    config: &SystemConfig<T>,
    q: &AnalogCombiner<T>,
    spec: &QuantizerSpec<T>,
    mode: StatsMode,
) -> Result<BussgangStats<T>> {
    let nv = config.microstrips();
    if q.microstrips() != nv || q.elements_per_microstrip() != config.elements_per_microstrip() {
        return Err(DmaError::invalid("analog combiner does not match configuration"));
    }
    let ps = config.transmit_power();
    let (m, gain) = combined_channel(channel, q);
    let mut c_y = &m * m.adjoint() * cr(ps);
    for i in 0..nv {
        c_y[(i, i)] += cr(config.noise_variance() * gain[i]);
    }

    let (rho_b, f_diag, g_diag) = if spec.is_infinite() {
        (T::one(), vec![T::one(); nv], vec![T::zero(); nv])
    } else {
        match mode {
            StatsMode::LargeK => {
                let rho = rho_b_closed_form(
                    spec.resolution(),
                    config.elements_per_microstrip(),
                    config.users(),
                    config.gamma_av(),
                    spec,
                )?;
                let cg = (T::one() - rho * rho) * large_k_chain_variance(config);
                (rho, vec![rho; nv], vec![cg; nv])
            }
            StatsMode::Exact => {
                let mut f = Vec::with_capacity(nv);
                let mut g = Vec::with_capacity(nv);
                for i in 0..nv {
                    let var = c_y[(i, i)].re;
                    if !(var > T::zero()) {
                        f.push(T::one());
                        g.push(T::zero());
                        continue;
                    }
                    let half = var / T::lit(2.0);
                    let chain = spec.rescaled(half.sqrt());
                    let rho = chain.bussgang_gain(half);
                    let power = chain.output_power(half) * T::lit(2.0);
                    f.push(rho);
                    g.push((power - rho * rho * var).max(T::zero()));
                }
                let rho = spec.rescaled(T::one()).bussgang_gain(T::one());
                (rho, f, g)
            }
        }
    };

    let f_b = DMatrix::from_diagonal(&DVector::from_iterator(nv, f_diag.iter().map(|&x| cr(x))));
    let c_g = DMatrix::from_diagonal(&DVector::from_iterator(nv, g_diag.iter().map(|&x| cr(x))));
    let c_z = &f_b * &c_y * f_b.adjoint() + &c_g;
    let c_zs = &f_b * &m * cr(ps);
    if !is_finite(&c_z) || !is_finite(&c_zs) {
        return Err(DmaError::numerical("non-finite Bussgang covariance"));
    }
    Ok(BussgangStats {
        rho_b,
        f_b,
        c_g,
        c_y,
        c_z,
        c_zs,
        transmit_power: ps,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(b: u32) -> QuantizerSpec<f64> {
        make_uniform_quantizer(Resolution::Finite(b), 1.0).unwrap()
    }

    #[test]
    fn optimal_steps_match_known_anchors() {
        let anchors = [(1, 1.5956), (2, 0.9957), (3, 0.5860), (4, 0.3352)];
        for (b, d) in anchors {
            let s = optimal_uniform_step(b).unwrap();
            assert!((s - d).abs() < 5e-4, "b={b}: {s}");
        }
        // one bit: the optimum is the centroid pair ±E|x|
        let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((optimal_uniform_step(1).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn one_bit_layout() {
        let spec = q(1);
        let d = optimal_uniform_step(1).unwrap();
        assert_eq!(spec.thresholds().len(), 3);
        assert_eq!(spec.thresholds()[0], f64::NEG_INFINITY);
        assert_eq!(spec.thresholds()[1], 0.0);
        assert_eq!(spec.thresholds()[2], f64::INFINITY);
        assert_eq!(spec.levels(), &[-d / 2.0, d / 2.0]);
    }

    #[test]
    fn layout_is_symmetric() {
        for b in 1..=5 {
            let spec = q(b);
            let n = 1usize << b;
            assert_eq!(spec.levels().len(), n);
            assert_eq!(spec.thresholds().len(), n + 1);
            for i in 0..=n {
                assert_eq!(spec.thresholds()[i], -spec.thresholds()[n - i]);
            }
            for i in 0..n {
                assert_eq!(spec.levels()[i], -spec.levels()[n - 1 - i]);
            }
            assert!(spec.thresholds().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn zero_bits_rejected() {
        assert!(matches!("0".parse::<Resolution>(), Err(DmaError::ZeroBits)));
        assert!(make_uniform_quantizer::<f64>(Resolution::Finite(0), 1.0).is_err());
        assert!(make_uniform_quantizer::<f64>(Resolution::Finite(2), 0.0).is_err());
    }

    #[test]
    fn resolution_text_round_trip() {
        for r in [Resolution::Finite(1), Resolution::Finite(3), Resolution::Infinite] {
            assert_eq!(r.to_string().parse::<Resolution>().unwrap(), r);
        }
        assert_eq!(Resolution::Infinite.to_string(), "inf");
    }

    #[test]
    fn infinite_is_identity() {
        let spec = make_uniform_quantizer::<f64>(Resolution::Infinite, 1.0).unwrap();
        for x in [-3.2, 0.0, 1e-9, 7.5] {
            assert_eq!(spec.quantize(x), x);
        }
        let y = CMat::<f64>::from_fn(3, 4, |i, j| c(i as f64 - 1.3, j as f64 * 0.7));
        assert_eq!(quantize_complex(&spec, &y), y);
        assert_eq!(spec.bussgang_gain(2.0), 1.0);
    }

    #[test]
    fn one_bit_outputs_two_levels() {
        let spec = q(1);
        let l = spec.levels()[1];
        let y = CMat::<f64>::from_fn(5, 7, |i, j| c((i as f64 - 2.1) * 0.9, (j as f64 - 3.3) * 1.7));
        for z in quantize_complex(&spec, &y).iter() {
            assert_eq!(z.re.abs(), l);
            assert_eq!(z.im.abs(), l);
        }
    }

    #[test]
    fn two_bit_is_idempotent() {
        let spec = q(2);
        let y = CMat::<f64>::from_fn(4, 9, |i, j| c((i as f64 - 1.7) * 0.8, (j as f64 - 4.1) * 0.45));
        let once = quantize_complex(&spec, &y);
        assert_eq!(quantize_complex(&spec, &once), once);
    }

    #[test]
    fn closed_form_gain_infinite_is_one() {
        let spec = make_uniform_quantizer::<f64>(Resolution::Infinite, 1.0).unwrap();
        assert_eq!(rho_b_closed_form(Resolution::Infinite, 8, 4, 3.0, &spec).unwrap(), 1.0);
    }

    #[test]
    fn closed_form_one_bit_is_two_over_pi() {
        // Δ₁/2 coincides with the MMSE-optimal 1-bit level σ√(2/π).
        let rho = rho_b_closed_form(Resolution::Finite(1), 8, 4, 3.0, &q(1)).unwrap();
        assert!((rho - 2.0 / std::f64::consts::PI).abs() < 1e-4, "{rho}");
    }

    #[test]
    fn closed_form_is_monotone_in_bits() {
        let rhos: Vec<f64> = (1..=4)
            .map(|b| rho_b_closed_form(Resolution::Finite(b), 8, 4, 3.0, &q(b)).unwrap())
            .collect();
        assert!(rhos.windows(2).all(|w| w[0] < w[1]), "{rhos:?}");
        assert!(rhos.iter().all(|&r| r > 0.0 && r < 1.0));
    }

    #[test]
    fn closed_form_is_scale_free_in_spec() {
        let a = rho_b_closed_form(Resolution::Finite(3), 8, 4, 3.0, &q(3)).unwrap();
        let b = rho_b_closed_form(Resolution::Finite(3), 8, 4, 3.0, &q(3).rescaled(17.0)).unwrap();
        assert!((a - b).abs() < 1e-14);
        // Scaled spec at its own variance has the unit-variance gain.
        assert!((q(3).rescaled(2.0).bussgang_gain(4.0) - a).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_variance() {
        assert!(rho_b_closed_form(Resolution::Finite(2), 8, 4, -2.0, &q(2)).is_err());
    }
}
