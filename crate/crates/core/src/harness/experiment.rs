use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::plan::{ExperimentPlan, Sweep};
use crate::design::{alternating_design, AnalogCombiner, DigitalCombiner};
use crate::error::{DmaError, Result};
use crate::model::{make_config, sample_channel, transmit, ChannelRealization, SystemConfig};
use crate::quantizer::{combined_channel, make_uniform_quantizer, QuantizerSpec, Resolution};
use crate::scalar::{c, Real};
use crate::seed::derive_seed;

/// Symbols simulated per block in [`evaluate_exact_mse`].
const BLOCK: usize = 1000;

// Seed stream tags.
const TAG_CHANNEL: u64 = 1;
const TAG_DESIGN: u64 = 2;
const TAG_SYMBOLS: u64 = 3;

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, samples: n }
    }
}

/// Empirical MSE `(1/T) Σ ‖s_t − W† Q_b(Q A r_t)‖²` through the true
/// quantizer.
///
/// Each RF chain has its own gain control: the quantizer is rescaled to the
/// per-dimension standard deviation `sqrt(C_y,ii / 2)` of that chain. The
/// returned standard error is that of the per-symbol squared error.
pub fn evaluate_exact_mse<T: Real>(
    channel: &ChannelRealization<T>,
    config: &SystemConfig<T>,
    spec: &QuantizerSpec<T>,
    q: &AnalogCombiner<T>,
    w: &DigitalCombiner<T>,
    symbols: usize,
    seed: u64,
) -> Result<Estimate> {
    let nv = config.microstrips();
    let ne = config.elements_per_microstrip();
    if q.microstrips() != nv || q.elements_per_microstrip() != ne {
        return Err(DmaError::invalid("analog combiner does not match configuration"));
    }
    if w.w.nrows() != nv || w.w.ncols() != config.users() {
        return Err(DmaError::invalid("digital combiner has the wrong shape"));
    }
    let (m, gain) = combined_channel(channel, q);
    let ps = config.transmit_power();
    let chains: Vec<QuantizerSpec<T>> = (0..nv)
        .map(|i| {
            let var = ps * m.row(i).norm_squared() + config.noise_variance() * gain[i];
            if spec.is_infinite() || !(var > T::zero()) {
                spec.clone()
            } else {
                spec.rescaled((var / T::lit(2.0)).sqrt())
            }
        })
        .collect();
    let wa: Vec<_> = (0..nv * ne).map(|idx| q.weight(idx) * channel.a[idx]).collect();
    let wh = w.w.adjoint();

    let mut errors = Vec::with_capacity(symbols);
    let mut done = 0;
    let mut block = 0u64;
    while done < symbols {
        let len = BLOCK.min(symbols - done);
        let batch = transmit(channel, config, len, derive_seed(seed, &[block]))?;
        let mut z = DMatrix::from_element(nv, len, c(T::zero(), T::zero()));
        for i in 0..nv {
            for t in 0..len {
                let mut y = c(T::zero(), T::zero());
                for l in 0..ne {
                    y += wa[i * ne + l] * batch.received[(i * ne + l, t)];
                }
                z[(i, t)] = c(chains[i].quantize(y.re), chains[i].quantize(y.im));
            }
        }
        let err = &batch.symbols - &wh * &z;
        errors.extend(err.column_iter().map(|col| col.norm_squared().to_f64_lossy()));
        done += len;
        block += 1;
    }
    Ok(Estimate::from_samples(&errors))
}

/// One CSV row: trial means at one (sweep value, resolution) point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub sweep: Sweep,
    pub sweep_value: f64,
    pub bits: Resolution,
    /// Total empirical MSE `E‖s − ŝ‖²` through the true quantizer.
    pub mse_exact: f64,
    /// Analytic large-K MSE of the designed combiners.
    pub mse_approx: f64,
    pub trials: usize,
    pub seed: u64,
}

/// A record with its across-trial spread and timing.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub record: ExperimentRecord,
    pub stderr_exact: f64,
    pub stderr_approx: f64,
    pub users: usize,
    pub wallclock_secs: f64,
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    exact: f64,
    approx: f64,
    secs: f64,
}

/// Seed of every random draw in one trial. Channel, initial weights and
/// symbols are shared across resolutions (common random numbers), so the
/// per-trial differences between `b` values are paired.
pub fn trial_seed(base: u64, sweep: Sweep, sweep_value: f64, trial: usize, tag: u64) -> u64 {
    derive_seed(base, &[sweep as u64, sweep_value.to_bits(), trial as u64, tag])
}

fn run_trial(
    plan: &ExperimentPlan,
    config: &SystemConfig<f64>,
    value: f64,
    trial: usize,
) -> Vec<Result<TrialOutcome>> {
    let seed = |tag| trial_seed(plan.base_seed, plan.sweep, value, trial, tag);
    let channel = sample_channel(config, seed(TAG_CHANNEL));
    plan.bits_list
        .iter()
        .map(|&bits| {
            let start = Instant::now();
            let spec = make_uniform_quantizer(bits, 1.0)?;
            let mut options = plan.design.clone();
            options.seed = seed(TAG_DESIGN);
            options.sdp.seed = derive_seed(options.seed, &[TAG_DESIGN]);
            let design = alternating_design(&channel, config, &spec, &options)?;
            let exact = evaluate_exact_mse(
                &channel,
                config,
                &spec,
                &design.q_opt,
                &design.w_opt,
                plan.symbols_per_trial,
                seed(TAG_SYMBOLS),
            )?;
            Ok(TrialOutcome {
                exact: exact.mean,
                approx: design.final_mse(),
                secs: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Runs every (sweep value, trial) job, in parallel, and aggregates per
/// (sweep value, b). Output is independent of the thread count.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<PointResult>> {
    plan.validate()?;
    let configs: Vec<SystemConfig<f64>> = plan
        .sweep_values
        .iter()
        .map(|&v| make_config(&plan.config_at(v)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..plan.sweep_values.len())
        .flat_map(|p| (0..plan.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Vec<Result<TrialOutcome>>> = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(plan, &configs[p], plan.sweep_values[p], t))
        .collect();

    let mut bit_order: Vec<usize> = (0..plan.bits_list.len()).collect();
    bit_order.sort_by_key(|&i| plan.bits_list[i].code());
    let mut points = Vec::new();
    for (p, &value) in plan.sweep_values.iter().enumerate() {
        for &bi in &bit_order {
            let bits = plan.bits_list[bi];
            let mut exact = Vec::new();
            let mut approx = Vec::new();
            let mut secs = 0.0;
            for (job, outcome) in jobs.iter().zip(&outcomes) {
                if job.0 != p {
                    continue;
                }
                match &outcome[bi] {
                    Ok(o) if o.exact.is_finite() && o.approx.is_finite() => {
                        exact.push(o.exact);
                        approx.push(o.approx);
                        secs += o.secs;
                    }
                    Ok(_) => log::warn!(
                        "{}={value} b={bits} trial {}: non-finite MSE, excluded",
                        plan.sweep,
                        job.1
                    ),
                    Err(e) => log::warn!("{}={value} b={bits} trial {}: {e}", plan.sweep, job.1),
                }
            }
            if exact.is_empty() {
                return Err(DmaError::NoSuccessfulTrials { sweep_value: value, bits: bits.to_string() });
            }
            let e = Estimate::from_samples(&exact);
            let a = Estimate::from_samples(&approx);
            points.push(PointResult {
                record: ExperimentRecord {
                    sweep: plan.sweep,
                    sweep_value: value,
                    bits,
                    mse_exact: e.mean,
                    mse_approx: a.mean,
                    trials: exact.len(),
                    seed: plan.base_seed,
                },
                stderr_exact: e.stderr,
                stderr_approx: a.stderr,
                users: configs[p].users(),
                wallclock_secs: secs,
            });
        }
    }
    // Duplicate resolutions in the bit list collapse to identical rows; keep one.
    points.dedup_by(|a, b| a.record.sweep_value == b.record.sweep_value && a.record.bits == b.record.bits);
    Ok(points)
}
