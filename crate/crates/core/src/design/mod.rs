//! Hybrid combiner design: closed-form digital stage, quadratic-transform
//! surrogate for the analog stage, and the alternating optimization loop.

mod analog;
mod combiner;
mod digital;

use serde::{Deserialize, Serialize};

pub use analog::{quadratic_form, update_analog, upsilon, AnalogUpdate, QuadraticForm};
pub use combiner::{AnalogCombiner, DigitalCombiner};
pub use digital::{analytic_mse, digital_combiner, mse_at_optimum};

use crate::error::{DmaError, Result};
use crate::linalg::CMat;
use crate::model::{ChannelRealization, SystemConfig};
use crate::quantizer::{bussgang_stats, BussgangStats, QuantizerSpec, StatsMode};
use crate::scalar::Real;
use crate::sdp::SdpOptions;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignOptions {
    pub iter_max: usize,
    /// Stop once the relative MSE decrease falls below this.
    pub tolerance: f64,
    /// Gaussian randomization draws per analog update.
    pub randomizations: usize,
    /// Seeds the initial weights and the randomization draws.
    pub seed: u64,
    pub sdp: SdpOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            iter_max: 20,
            tolerance: 1e-4,
            randomizations: 200,
            seed: 0,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult<T: Real> {
    pub q_opt: AnalogCombiner<T>,
    pub w_opt: DigitalCombiner<T>,
    /// Statistics of `q_opt` under `mode`.
    pub stats: BussgangStats<T>,
    /// Analytic MSE of the initial combiner followed by one entry per
    /// iteration (non-increasing).
    pub mse_trajectory: Vec<T>,
    pub iterations_run: usize,
    /// Number of analog candidates rejected by the monotonicity guard.
    pub rejected_updates: usize,
    pub converged: bool,
    pub mode: StatsMode,
}

impl<T: Real> DesignResult<T> {
    pub fn final_mse(&self) -> T {
        *self.mse_trajectory.last().expect("trajectory is never empty")
    }
}

struct Evaluated<T: Real> {
    q: AnalogCombiner<T>,
    stats: BussgangStats<T>,
    w: DigitalCombiner<T>,
    mse: T,
}

fn evaluate<T: Real>(
    channel: &ChannelRealization<T>,
    config: &SystemConfig<T>,
    spec: &QuantizerSpec<T>,
    q: AnalogCombiner<T>,
    mode: StatsMode,
) -> Result<Evaluated<T>> {
    let stats = bussgang_stats(channel, config, &q, spec, mode)?;
    let w = digital_combiner(&stats)?;
    let mse = analytic_mse(&stats, &w);
    Ok(Evaluated { q, stats, w, mse })
}

/// Joint design of the analog and digital combiners.
///
/// Design statistics are always the large-K closed forms. Each iteration
/// refreshes Φ once from the current combiner, solves the relaxed analog
/// problem and keeps the candidate only if its analytic MSE (with its own
/// optimal `W`) does not exceed the current one.
pub fn alternating_design<T: Real>(
    channel: &ChannelRealization<T>,
    config: &SystemConfig<T>,
    spec: &QuantizerSpec<T>,
    options: &DesignOptions,
) -> Result<DesignResult<T>> {
    let mode = StatsMode::LargeK;
    let at = |iteration: usize| move |e: DmaError| DmaError::Design { iteration, source: Box::new(e) };
    let mut rng = rng_from_seed(options.seed);
    let init = AnalogCombiner::random(config.microstrips(), config.elements_per_microstrip(), &mut rng);
    let mut current = evaluate(channel, config, spec, init, mode).map_err(at(0))?;
    let mut trajectory = vec![current.mse];
    let mut warm: Option<CMat<T>> = None;
    let mut converged = false;
    let mut rejected = 0;
    let mut iterations = 0;

    for iteration in 1..=options.iter_max {
        iterations = iteration;
        let form = quadratic_form(channel, config, &current.q, &current.stats).map_err(at(iteration))?;
        let update = update_analog(
            &form,
            &options.sdp,
            options.randomizations,
            warm.as_ref(),
            &mut rng,
        )
        .map_err(at(iteration))?;
        warm = Some(update.solution.factor);
        let candidate = evaluate(channel, config, spec, update.combiner, mode).map_err(at(iteration))?;
        let previous = current.mse;
        if candidate.mse <= previous {
            current = candidate;
        } else {
            rejected += 1;
        }
        trajectory.push(current.mse);
        let decrease = (previous - current.mse) / previous.max(T::eps());
        if decrease < T::lit(options.tolerance) {
            converged = true;
            break;
        }
    }

    Ok(DesignResult {
        q_opt: current.q,
        w_opt: current.w,
        stats: current.stats,
        mse_trajectory: trajectory,
        iterations_run: iterations,
        rejected_updates: rejected,
        converged,
        mode,
    })
}
