//! Monte Carlo sweeps over SNR, N_v and N_e, with CSV output and the CLI.

pub mod cli;
pub mod config;
mod experiment;
mod output;
mod plan;
pub mod validate;

pub use experiment::{evaluate_exact_mse, run_experiment, trial_seed, Estimate, ExperimentRecord, PointResult};
pub use output::{
    emit_csv, emit_plot_data, parse_csv, parse_csv_str, plot_path, plot_points, write_csv, PlotPoint, CSV_HEADER,
    PLOT_HEADER,
};
pub use plan::{parse_bits_list, parse_value_list, profile_defaults, ExperimentPlan, Profile, ProfileDefaults, Sweep};
