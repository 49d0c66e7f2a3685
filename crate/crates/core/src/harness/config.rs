//! Run configuration: command-line flags, an optional TOML file and the
//! `DMA_SEED` environment variable, merged with CLI > file > env precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::plan::{parse_bits_list, ExperimentPlan, Profile, Sweep};
use crate::error::{DmaError, Result};
use crate::quantizer::Resolution;
use crate::sdp::SdpMethod;

pub const SEED_ENV: &str = "DMA_SEED";

/// Every `run` option; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub sweep: Option<Sweep>,
    pub bits: Option<Vec<Resolution>>,
    pub profile: Option<Profile>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub snr_db: Option<Vec<f64>>,
    pub nv: Option<Vec<usize>>,
    pub ne: Option<Vec<usize>>,
    pub users: Option<usize>,
    pub iter_max: Option<usize>,
    pub tol: Option<f64>,
    pub symbols: Option<usize>,
    pub randomizations: Option<usize>,
    pub sdp_method: Option<SdpMethod>,
}

impl RunOverrides {
    /// Field-wise `self` if set, else `lower`.
    pub fn or(self, lower: RunOverrides) -> RunOverrides {
        RunOverrides {
            sweep: self.sweep.or(lower.sweep),
            bits: self.bits.or(lower.bits),
            profile: self.profile.or(lower.profile),
            trials: self.trials.or(lower.trials),
            seed: self.seed.or(lower.seed),
            out: self.out.or(lower.out),
            snr_db: self.snr_db.or(lower.snr_db),
            nv: self.nv.or(lower.nv),
            ne: self.ne.or(lower.ne),
            users: self.users.or(lower.users),
            iter_max: self.iter_max.or(lower.iter_max),
            tol: self.tol.or(lower.tol),
            symbols: self.symbols.or(lower.symbols),
            randomizations: self.randomizations.or(lower.randomizations),
            sdp_method: self.sdp_method.or(lower.sdp_method),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BitToken {
    Int(u32),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BitsField {
    List(Vec<BitToken>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    sweep: Option<Sweep>,
    profile: Option<Profile>,
    bits: Option<BitsField>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    symbols: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SystemSection {
    snr_db: Option<Vec<f64>>,
    nv: Option<Vec<usize>>,
    ne: Option<Vec<usize>>,
    users: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DesignSection {
    iter_max: Option<usize>,
    tol: Option<f64>,
    randomizations: Option<usize>,
    sdp_method: Option<SdpMethod>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    run: RunSection,
    system: SystemSection,
    design: DesignSection,
}

/// Parses a config file body.
///
/// ```toml
/// [run]
/// sweep = "snr"
/// profile = "desk"
/// bits = [1, 2, 3, "inf"]
/// trials = 20
/// seed = 7
/// out = "snr.csv"
///
/// [system]
/// snr_db = [-10, -5, 0, 5, 10, 15]
///
/// [design]
/// iter_max = 20
/// tol = 1e-4
/// ```
pub fn parse_config_str(text: &str, path: &Path) -> Result<RunOverrides> {
    let file: FileConfig = toml::from_str(text).map_err(|e| DmaError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let bits = match file.run.bits {
        None => None,
        Some(BitsField::Text(s)) => Some(parse_bits_list(&s)?),
        Some(BitsField::List(tokens)) => Some(
            tokens
                .into_iter()
                .map(|t| match t {
                    BitToken::Int(b) => b.to_string().parse(),
                    BitToken::Text(s) => s.parse(),
                })
                .collect::<Result<Vec<Resolution>>>()?,
        ),
    };
    Ok(RunOverrides {
        sweep: file.run.sweep,
        bits,
        profile: file.run.profile,
        trials: file.run.trials,
        seed: file.run.seed,
        out: file.run.out,
        snr_db: file.system.snr_db,
        nv: file.system.nv,
        ne: file.system.ne,
        users: file.system.users,
        iter_max: file.design.iter_max,
        tol: file.design.tol,
        symbols: file.run.symbols,
        randomizations: file.design.randomizations,
        sdp_method: file.design.sdp_method,
    })
}

pub fn load_config(path: &Path) -> Result<RunOverrides> {
    let text = std::fs::read_to_string(path).map_err(|source| DmaError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, path)
}

/// Reads `DMA_SEED` from an environment lookup.
pub fn env_overrides(lookup: impl Fn(&str) -> Option<String>) -> Result<RunOverrides> {
    let seed = match lookup(SEED_ENV) {
        None => None,
        Some(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| DmaError::invalid(format!("{SEED_ENV} must be an unsigned integer, got `{s}`")))?,
        ),
    };
    Ok(RunOverrides { seed, ..Default::default() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub plan: ExperimentPlan,
    pub out: PathBuf,
}

fn single<T: Copy>(list: &Option<Vec<T>>, name: &str) -> Result<Option<T>> {
    match list.as_deref() {
        None => Ok(None),
        Some([x]) => Ok(Some(*x)),
        Some(_) => Err(DmaError::invalid(format!(
            "`{name}` is not the swept quantity and must hold a single value"
        ))),
    }
}

/// Builds the plan from merged options. Lists of the swept quantity replace
/// the profile's sweep values; a single value of a non-swept quantity fixes
/// it.
pub fn resolve(opts: RunOverrides) -> Result<ResolvedRun> {
    let sweep = opts.sweep.ok_or_else(|| DmaError::invalid("no sweep given (snr, nv or ne)"))?;
    let out = opts.out.clone().ok_or_else(|| DmaError::invalid("no output path given"))?;
    let mut plan = ExperimentPlan::from_profile(opts.profile.unwrap_or(Profile::Desk), sweep);

    let as_f64 = |v: &Vec<usize>| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    match sweep {
        Sweep::Snr => {
            if let Some(v) = &opts.snr_db {
                plan.sweep_values = v.clone();
            }
        }
        Sweep::Nv => {
            if let Some(v) = &opts.nv {
                plan.sweep_values = as_f64(v);
            }
        }
        Sweep::Ne => {
            if let Some(v) = &opts.ne {
                plan.sweep_values = as_f64(v);
            }
        }
    }
    if sweep != Sweep::Snr {
        if let Some(s) = single(&opts.snr_db, "snr-db")? {
            plan.snr_db = s;
        }
    }
    if sweep != Sweep::Nv {
        if let Some(n) = single(&opts.nv, "nv")? {
            plan.fixed.microstrips = n;
        }
    }
    if sweep != Sweep::Ne {
        if let Some(n) = single(&opts.ne, "ne")? {
            plan.fixed.elements_per_microstrip = n;
        }
    }
    if let Some(k) = opts.users {
        plan.fixed.users = k;
    }
    if let Some(b) = opts.bits {
        plan.bits_list = b;
    }
    if let Some(t) = opts.trials {
        plan.trials = t;
    }
    if let Some(t) = opts.symbols {
        plan.symbols_per_trial = t;
    }
    plan.base_seed = opts.seed.unwrap_or(0);
    if let Some(i) = opts.iter_max {
        plan.design.iter_max = i;
    }
    if let Some(t) = opts.tol {
        if !(t >= 0.0) {
            return Err(DmaError::invalid("tolerance must be non-negative"));
        }
        plan.design.tolerance = t;
    }
    if let Some(r) = opts.randomizations {
        plan.design.randomizations = r;
    }
    if let Some(m) = opts.sdp_method {
        plan.design.sdp.method = m;
    }
    plan.validate()?;
    Ok(ResolvedRun { plan, out })
}
