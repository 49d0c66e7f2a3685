use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{env_overrides, load_config, resolve, RunOverrides};
use super::experiment::run_experiment;
use super::output::{emit_csv, emit_plot_data, plot_path};
use super::plan::{parse_bits_list, parse_value_list, Profile, Sweep};
use super::validate::run_validation;
use crate::error::{DmaError, Result};
use crate::quantizer::Resolution;
use crate::sdp::SdpMethod;

#[derive(Debug, Parser)]
#[command(name = "dma", version, about = "DMA receiver combiner design and Monte Carlo sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one sweep and write the CSV and plot data.
    Run(RunArgs),
    /// Check the invariant and property suite and print pass/fail per property.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn bits_arg(s: &str) -> std::result::Result<Vec<Resolution>, String> {
    parse_bits_list(s).map_err(|e| e.to_string())
}

fn floats_arg(s: &str) -> std::result::Result<Vec<f64>, String> {
    parse_value_list(s).map_err(|e| e.to_string())
}

fn sizes_arg(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad size `{t}`")))
        .collect()
}

fn sdp_arg(s: &str) -> std::result::Result<SdpMethod, String> {
    match s {
        "low-rank" => Ok(SdpMethod::LowRank),
        "admm" => Ok(SdpMethod::Admm),
        _ => Err(format!("unknown SDP method `{s}` (low-rank, admm)")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with `[run]`, `[system]` and `[design]` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sweep: Option<Sweep>,
    /// Comma separated resolutions, e.g. `1,2,3,inf`.
    #[arg(long, value_parser = bits_arg)]
    pub bits: Option<::std::vec::Vec<Resolution>>,
    #[arg(long)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; falls back to the config file, then `DMA_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SNR values in dB (one value fixes the SNR of an N_v / N_e sweep).
    #[arg(long, value_parser = floats_arg, allow_hyphen_values = true)]
    pub snr_db: Option<::std::vec::Vec<f64>>,
    #[arg(long, value_parser = sizes_arg)]
    pub nv: Option<::std::vec::Vec<usize>>,
    #[arg(long, value_parser = sizes_arg)]
    pub ne: Option<::std::vec::Vec<usize>>,
    /// Number of users K.
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub iter_max: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Symbols per trial for the empirical MSE.
    #[arg(long)]
    pub symbols: Option<usize>,
    #[arg(long)]
    pub randomizations: Option<usize>,
    /// `low-rank` or `admm`.
    #[arg(long, value_parser = sdp_arg)]
    pub sdp_method: Option<SdpMethod>,
}

impl RunArgs {
    pub fn overrides(&self) -> RunOverrides {
        RunOverrides {
            sweep: self.sweep,
            bits: self.bits.clone(),
            profile: self.profile,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            snr_db: self.snr_db.clone(),
            nv: self.nv.clone(),
            ne: self.ne.clone(),
            users: self.users,
            iter_max: self.iter_max,
            tol: self.tol,
            symbols: self.symbols,
            randomizations: self.randomizations,
            sdp_method: self.sdp_method,
        }
    }

    /// Merges flags, the config file and the environment.
    pub fn merged(&self, env: impl Fn(&str) -> Option<String>) -> Result<RunOverrides> {
        let file = match &self.config {
            Some(path) => load_config(path)?,
            None => RunOverrides::default(),
        };
        Ok(self.overrides().or(file).or(env_overrides(env)?))
    }
}

pub fn run_command(args: &RunArgs, env: impl Fn(&str) -> Option<String>) -> Result<PathBuf> {
    let resolved = resolve(args.merged(env)?)?;
    log::info!(
        "{} sweep over {:?}, bits {:?}, {} trials, seed {}",
        resolved.plan.sweep,
        resolved.plan.sweep_values,
        resolved.plan.bits_list.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
        resolved.plan.trials,
        resolved.plan.base_seed
    );
    let points = run_experiment(&resolved.plan)?;
    let records: Vec<_> = points.iter().map(|p| p.record.clone()).collect();
    emit_csv(&records, &resolved.out)?;
    emit_plot_data(&points, &plot_path(&resolved.out))?;
    for p in &points {
        log::info!(
            "{}={} b={}: exact {:.6} approx {:.6} ({} trials, {:.1}s)",
            p.record.sweep,
            p.record.sweep_value,
            p.record.bits,
            p.record.mse_exact,
            p.record.mse_approx,
            p.record.trials,
            p.wallclock_secs
        );
    }
    Ok(resolved.out)
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => match run_command(&args, |k| std::env::var(k).ok()) {
            Ok(path) => {
                println!("wrote {} and {}", path.display(), plot_path(&path).display());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                if matches!(e, DmaError::InvalidParameter(_) | DmaError::TooManyUsers { .. }) {
                    2
                } else {
                    1
                }
            }
        },
        Command::Validate { seed } => {
            let reports = run_validation(seed);
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!("{} passed, {failed} failed", reports.len() - failed);
            i32::from(failed > 0)
        }
    }
}
