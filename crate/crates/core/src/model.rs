//! System configuration, channel and waveguide model, and uplink transmission.

use std::f64::consts::TAU;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DmaError, Result};
use crate::linalg::{CMat, CVec};
use crate::scalar::{c, cis, Real};
use crate::seed::{complex_normal, rng_from_seed};

pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_BETA: f64 = TAU;
pub const DEFAULT_ELEMENT_SPACING: f64 = 0.2;

/// Unvalidated scenario parameters, all linear scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RawConfig {
    pub users: usize,
    pub microstrips: usize,
    pub elements_per_microstrip: usize,
    pub transmit_power: f64,
    pub noise_variance: f64,
    pub alpha: f64,
    pub beta: f64,
    pub element_spacing: f64,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            users: 4,
            microstrips: 8,
            elements_per_microstrip: 8,
            transmit_power: 1.0,
            noise_variance: 1.0,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            element_spacing: DEFAULT_ELEMENT_SPACING,
        }
    }
}

impl RawConfig {
    pub fn new(users: usize, microstrips: usize, elements_per_microstrip: usize) -> Self {
        Self {
            users,
            microstrips,
            elements_per_microstrip,
            ..Self::default()
        }
    }

    /// Fixes `P_s = 1` and sets the noise variance from an average SNR in dB.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.transmit_power = 1.0;
        self.noise_variance = 10f64.powf(-snr_db / 10.0);
        self
    }

    pub fn with_powers(mut self, transmit_power: f64, noise_variance: f64) -> Self {
        self.transmit_power = transmit_power;
        self.noise_variance = noise_variance;
        self
    }
}

/// Validated system configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T: Real> {
    users: usize,
    microstrips: usize,
    elements_per_microstrip: usize,
    transmit_power: T,
    noise_variance: T,
    alpha: T,
    beta: T,
    element_spacing: T,
}

pub fn make_config<T: Real>(raw: &RawConfig) -> Result<SystemConfig<T>> {
    if raw.users == 0 || raw.microstrips == 0 || raw.elements_per_microstrip == 0 {
        return Err(DmaError::invalid("K, N_v and N_e must all be at least 1"));
    }
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(DmaError::invalid(format!("{name} must be positive and finite, got {v}")))
        }
    };
    positive("transmit power", raw.transmit_power)?;
    positive("noise variance", raw.noise_variance)?;
    positive("element spacing", raw.element_spacing)?;
    if !(raw.alpha.is_finite() && raw.alpha >= 0.0) {
        return Err(DmaError::invalid(format!("alpha must be finite and >= 0, got {}", raw.alpha)));
    }
    if !raw.beta.is_finite() {
        return Err(DmaError::invalid("beta must be finite"));
    }
    let n = raw.microstrips * raw.elements_per_microstrip;
    if raw.users > n {
        return Err(DmaError::TooManyUsers { k: raw.users, n });
    }
    if 4 * raw.users > n {
        warn!("N = {n} is not much larger than K = {}", raw.users);
    }
    Ok(SystemConfig {
        users: raw.users,
        microstrips: raw.microstrips,
        elements_per_microstrip: raw.elements_per_microstrip,
        transmit_power: T::lit(raw.transmit_power),
        noise_variance: T::lit(raw.noise_variance),
        alpha: T::lit(raw.alpha),
        beta: T::lit(raw.beta),
        element_spacing: T::lit(raw.element_spacing),
    })
}

impl<T: Real> SystemConfig<T> {
    /// K.
    pub fn users(&self) -> usize {
        self.users
    }
    /// N_v.
    pub fn microstrips(&self) -> usize {
        self.microstrips
    }
    /// N_e.
    pub fn elements_per_microstrip(&self) -> usize {
        self.elements_per_microstrip
    }
    /// N = N_v · N_e.
    pub fn elements(&self) -> usize {
        self.microstrips * self.elements_per_microstrip
    }
    pub fn transmit_power(&self) -> T {
        self.transmit_power
    }
    pub fn noise_variance(&self) -> T {
        self.noise_variance
    }
    /// Γ_av = P_s / σ_n².
    pub fn gamma_av(&self) -> T {
        self.transmit_power / self.noise_variance
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn element_spacing(&self) -> T {
        self.element_spacing
    }

    /// Flat element index of element `l` on microstrip `i` (both 0-based).
    #[inline]
    pub fn element_index(&self, microstrip: usize, element: usize) -> usize {
        debug_assert!(microstrip < self.microstrips && element < self.elements_per_microstrip);
        microstrip * self.elements_per_microstrip + element
    }

    /// Microstrip hosting flat element `m`.
    #[inline]
    pub fn microstrip_of(&self, m: usize) -> usize {
        m / self.elements_per_microstrip
    }

    /// Distance from the output port to element `l` (0-based), `(l + 1) · d_e`.
    pub fn port_distance(&self, element: usize) -> T {
        T::from_usize(element + 1).unwrap() * self.element_spacing
    }

    /// Diagonal of the waveguide propagation matrix A.
    pub fn waveguide_response(&self) -> CVec<T> {
        let norm = T::from_usize(self.elements_per_microstrip).unwrap().sqrt().recip();
        DVector::from_fn(self.elements(), |m, _| {
            let d = self.port_distance(m % self.elements_per_microstrip);
            cis(self.beta * d) * c((self.alpha * d).exp() * norm, T::zero())
        })
    }
}

/// One draw of the multi-user channel together with the waveguide response.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    /// N × K channel matrix.
    pub h: CMat<T>,
    /// Diagonal of A (length N).
    pub a: CVec<T>,
    pub seed: u64,
}

impl<T: Real> ChannelRealization<T> {
    /// Dense A, for checks and small cases.
    pub fn a_matrix(&self) -> CMat<T> {
        DMatrix::from_diagonal(&self.a)
    }

    /// A · H.
    pub fn ah(&self) -> CMat<T> {
        let mut out = self.h.clone();
        for (mut row, a) in out.row_iter_mut().zip(self.a.iter()) {
            row *= *a;
        }
        out
    }

    pub fn elements(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }
}

pub fn sample_channel<T: Real>(config: &SystemConfig<T>, seed: u64) -> ChannelRealization<T> {
    let mut rng = rng_from_seed(seed);
    let h = DMatrix::from_fn(config.elements(), config.users(), |_, _| {
        complex_normal(&mut rng, 1.0)
    });
    ChannelRealization {
        h,
        a: config.waveguide_response(),
        seed,
    }
}

/// Transmitted symbols, noise and received pre-combining signal for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBatch<T: Real> {
    /// K × T symbols.
    pub symbols: CMat<T>,
    /// N × T received signal.
    pub received: CMat<T>,
    /// N × T noise.
    pub noise: CMat<T>,
}

pub fn transmit<T: Real>(
    channel: &ChannelRealization<T>,
    config: &SystemConfig<T>,
    len: usize,
    seed: u64,
) -> Result<SignalBatch<T>> {
    transmit_with_powers(
        channel,
        config.transmit_power().to_f64_lossy(),
        config.noise_variance().to_f64_lossy(),
        len,
        seed,
    )
}

/// Same as [`transmit`] with explicit powers; zero powers are allowed here.
pub fn transmit_with_powers<T: Real>(
    channel: &ChannelRealization<T>,
    transmit_power: f64,
    noise_variance: f64,
    len: usize,
    seed: u64,
) -> Result<SignalBatch<T>> {
    if len == 0 {
        return Err(DmaError::invalid("batch length T must be at least 1"));
    }
    if !(transmit_power >= 0.0 && noise_variance >= 0.0) {
        return Err(DmaError::invalid("powers must be non-negative"));
    }
    let mut rng = rng_from_seed(seed);
    let (n, k) = (channel.elements(), channel.users());
    let symbols = DMatrix::from_fn(k, len, |_, _| complex_normal(&mut rng, transmit_power));
    let noise = DMatrix::from_fn(n, len, |_, _| complex_normal(&mut rng, noise_variance));
    let received = &channel.h * &symbols + &noise;
    Ok(SignalBatch {
        symbols,
        received,
        noise,
    })
}
