use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::DesignOptions;
use crate::error::{DmaError, Result};
use crate::model::RawConfig;
use crate::quantizer::Resolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Average SNR Γ_av in dB.
    Snr,
    /// Number of microstrips N_v.
    Nv,
    /// Elements per microstrip N_e.
    Ne,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Snr => "snr",
            Sweep::Nv => "nv",
            Sweep::Ne => "ne",
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sweep {
    type Err = DmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snr" => Ok(Sweep::Snr),
            "nv" => Ok(Sweep::Nv),
            "ne" => Ok(Sweep::Ne),
            other => Err(DmaError::invalid(format!("unknown sweep `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Scaled-down sizes that run in minutes on one core.
    Desk,
    /// The full array sizes of the reference figures.
    Paper,
}

impl FromStr for Profile {
    type Err = DmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(DmaError::invalid(format!("unknown profile `{other}`"))),
        }
    }
}

/// Default scenario of a sweep: the fixed system template, the fixed SNR in
/// dB (ignored by the SNR sweep) and the swept values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDefaults {
    pub system: RawConfig,
    pub snr_db: f64,
    pub values: Vec<f64>,
    pub symbols_per_trial: usize,
}

pub fn profile_defaults(profile: Profile, sweep: Sweep) -> ProfileDefaults {
    let (k, nv, ne, snr_db, values): (usize, usize, usize, f64, Vec<f64>) = match (profile, sweep) {
        // Keeps K and N_v of the full-size case and shrinks N_e only.
        (Profile::Desk, Sweep::Snr) => (40, 10, 8, 5.0, vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0]),
        // Reaches N_v = K + 20 and K + 40 for the saturation check.
        (Profile::Desk, Sweep::Nv) => (4, 8, 2, 5.0, vec![2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 44.0]),
        (Profile::Desk, Sweep::Ne) => (4, 6, 8, 5.0, vec![2.0, 4.0, 8.0, 16.0]),
        (Profile::Paper, Sweep::Snr) => (40, 10, 200, 5.0, vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0]),
        (Profile::Paper, Sweep::Nv) => (
            50,
            10,
            20,
            5.0,
            (1..=10).map(|i| 10.0 * i as f64).collect(),
        ),
        (Profile::Paper, Sweep::Ne) => (50, 70, 20, 5.0, vec![10.0, 20.0, 30.0, 40.0, 50.0]),
    };
    ProfileDefaults {
        system: RawConfig::new(k, nv, ne).with_snr_db(snr_db),
        snr_db,
        values,
        symbols_per_trial: 10_000,
    }
}

/// One Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub sweep: Sweep,
    pub sweep_values: Vec<f64>,
    /// System template; the swept field is overwritten per point. Powers
    /// follow `P_s = 1`, `σ_n² = 10^{−snr_db/10}`.
    pub fixed: RawConfig,
    /// SNR in dB at every point of the N_v and N_e sweeps.
    pub snr_db: f64,
    pub bits_list: Vec<Resolution>,
    pub trials: usize,
    pub symbols_per_trial: usize,
    pub base_seed: u64,
    pub design: DesignOptions,
}

impl ExperimentPlan {
    pub fn from_profile(profile: Profile, sweep: Sweep) -> Self {
        let d = profile_defaults(profile, sweep);
        Self {
            sweep,
            sweep_values: d.values,
            fixed: d.system,
            snr_db: d.snr_db,
            bits_list: vec![
                Resolution::Finite(1),
                Resolution::Finite(2),
                Resolution::Finite(3),
                Resolution::Infinite,
            ],
            trials: 50,
            symbols_per_trial: d.symbols_per_trial,
            base_seed: 0,
            design: DesignOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return Err(DmaError::invalid("sweep values must not be empty"));
        }
        if !self.sweep_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(DmaError::invalid("sweep values must be strictly increasing"));
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return Err(DmaError::invalid("sweep values must be finite"));
        }
        if matches!(self.sweep, Sweep::Nv | Sweep::Ne)
            && self.sweep_values.iter().any(|&v| v < 1.0 || v.fract() != 0.0)
        {
            return Err(DmaError::invalid("N_v / N_e sweep values must be positive integers"));
        }
        if self.trials == 0 {
            return Err(DmaError::invalid("trials must be at least 1"));
        }
        if self.symbols_per_trial == 0 {
            return Err(DmaError::invalid("symbols per trial must be at least 1"));
        }
        if self.bits_list.is_empty() {
            return Err(DmaError::invalid("bit list must not be empty"));
        }
        crate::model::make_config::<f64>(&self.config_at(self.sweep_values[0]))?;
        Ok(())
    }

    /// Raw configuration at one sweep point.
    pub fn config_at(&self, value: f64) -> RawConfig {
        let mut raw = self.fixed.clone();
        match self.sweep {
            Sweep::Snr => raw = raw.with_snr_db(value),
            Sweep::Nv => {
                raw = raw.with_snr_db(self.snr_db);
                raw.microstrips = value as usize;
            }
            Sweep::Ne => {
                raw = raw.with_snr_db(self.snr_db);
                raw.elements_per_microstrip = value as usize;
            }
        }
        raw
    }
}

/// Parses `1,2,3,inf`.
pub fn parse_bits_list(s: &str) -> Result<Vec<Resolution>> {
    let bits: Vec<Resolution> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if bits.is_empty() {
        return Err(DmaError::invalid("empty bit list"));
    }
    Ok(bits)
}

/// Parses a comma separated list of numbers.
pub fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| DmaError::invalid(format!("bad number `{t}`")))
        })
        .collect()
}
