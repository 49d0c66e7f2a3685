//! Property suite behind the `validate` subcommand. Every check runs on
//! small seeded instances and reports pass/fail with a one-line detail.

use std::path::Path;

use rand::Rng;

use super::experiment::run_experiment;
use super::output::{parse_csv_str, write_csv};
use super::plan::{ExperimentPlan, Profile, Sweep};
use crate::design::{
    alternating_design, analytic_mse, digital_combiner, quadratic_form, update_analog, AnalogCombiner, DesignOptions,
    DigitalCombiner,
};
use crate::error::Result;
use crate::linalg::{min_eigenvalue, CMat, CVec};
use crate::model::{make_config, sample_channel, transmit, RawConfig};
use crate::quantizer::{bussgang_stats, make_uniform_quantizer, quantize_complex, Resolution, StatsMode};
use crate::scalar::{cis, cr, j};
use crate::sdp::{extract_rank_one, solve_sdp, SdpOptions, SdpProblem};
use crate::seed::{complex_normal, derive_seed, rng_from_seed, uniform_phase};
use crate::{ChannelRealization64, SystemConfig64};

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn report(name: &'static str, outcome: Result<(bool, String)>) -> PropertyReport {
    match outcome {
        Ok((passed, detail)) => PropertyReport { name, passed, detail },
        Err(e) => PropertyReport { name, passed: false, detail: format!("error: {e}") },
    }
}

fn instance(seed: u64, k: usize, nv: usize, ne: usize, snr_db: f64) -> Result<(SystemConfig64, ChannelRealization64)> {
    let config = make_config(&RawConfig::new(k, nv, ne).with_snr_db(snr_db))?;
    let channel = sample_channel(&config, derive_seed(seed, &[k as u64, nv as u64, ne as u64]));
    Ok((config, channel))
}

fn random_unimodular(n: usize, rng: &mut impl Rng) -> Vec<crate::C<f64>> {
    (0..n).map(|_| cis(uniform_phase::<f64, _>(rng))).collect()
}

fn w_optimality(seed: u64) -> Result<(bool, String)> {
    let mut rng = rng_from_seed(derive_seed(seed, &[1]));
    let mut worst = f64::INFINITY;
    for case in 0..5u64 {
        let (config, channel) = instance(seed + case, 3, 4, 4, 5.0)?;
        let q = AnalogCombiner::random(4, 4, &mut rng);
        let spec = make_uniform_quantizer(Resolution::Finite(2), 1.0)?;
        let stats = bussgang_stats(&channel, &config, &q, &spec, StatsMode::LargeK)?;
        let w = digital_combiner(&stats)?;
        let base = analytic_mse(&stats, &w);
        for _ in 0..10 {
            let mut d = CMat::from_fn(4, 3, |_, _| complex_normal::<f64, _>(&mut rng, 1.0));
            d *= cr(1e-3 / d.norm());
            let pert = analytic_mse(&stats, &DigitalCombiner { w: &w.w + d });
            worst = worst.min(pert - base);
        }
    }
    Ok((worst > 0.0, format!("min increase {worst:.3e}")))
}

fn design_runs(seed: u64) -> Result<Vec<(f64, crate::DesignResult64)>> {
    let mut out = Vec::new();
    for (case, bits) in [Resolution::Finite(1), Resolution::Finite(3), Resolution::Infinite].into_iter().enumerate() {
        let (config, channel) = instance(seed + case as u64, 2, 4, 4, 5.0)?;
        let spec = make_uniform_quantizer(bits, 1.0)?;
        let opts = DesignOptions { seed: derive_seed(seed, &[case as u64]), ..Default::default() };
        let k_ps = config.users() as f64 * config.transmit_power();
        out.push((k_ps, alternating_design(&channel, &config, &spec, &opts)?));
    }
    Ok(out)
}

fn monotone_ao(runs: &[(f64, crate::DesignResult64)]) -> (bool, String) {
    let worst = runs
        .iter()
        .flat_map(|(_, r)| r.mse_trajectory.windows(2).map(|w| w[1] - w[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    (worst <= 1e-10, format!("largest step {worst:.3e}"))
}

fn mse_range(runs: &[(f64, crate::DesignResult64)]) -> (bool, String) {
    let ok = runs
        .iter()
        .all(|(k_ps, r)| r.mse_trajectory.iter().all(|&m| (0.0..=*k_ps).contains(&m)));
    (ok, format!("{} trajectories within [0, K P_s]", runs.len()))
}

fn lorentzian(seed: u64) -> Result<(bool, String)> {
    let (config, channel) = instance(seed, 2, 3, 4, 5.0)?;
    let spec = make_uniform_quantizer(Resolution::Finite(2), 1.0)?;
    let mut rng = rng_from_seed(derive_seed(seed, &[4]));
    let mut q = AnalogCombiner::random(3, 4, &mut rng);
    let mut worst = q.lorentzian_violation();
    for _ in 0..4 {
        let stats = bussgang_stats(&channel, &config, &q, &spec, StatsMode::LargeK)?;
        let form = quadratic_form(&channel, &config, &q, &stats)?;
        q = update_analog(&form, &SdpOptions::default(), 50, None, &mut rng)?.combiner;
        worst = worst.max(q.lorentzian_violation());
    }
    Ok((worst < 1e-10, format!("max ||q - j/2| - 1/2| = {worst:.3e}")))
}

fn objective_equivalence(seed: u64) -> Result<(bool, String)> {
    let (config, channel) = instance(seed, 2, 4, 4, 5.0)?;
    let spec = make_uniform_quantizer(Resolution::Finite(3), 1.0)?;
    let mut rng = rng_from_seed(derive_seed(seed, &[5]));
    let q = AnalogCombiner::random(4, 4, &mut rng);
    let stats = bussgang_stats(&channel, &config, &q, &spec, StatsMode::LargeK)?;
    let form = quadratic_form(&channel, &config, &q, &stats)?;
    let diffs: Vec<f64> = (0..100)
        .map(|_| {
            let u = random_unimodular(16, &mut rng);
            let qv = CVec::from_iterator(16, u.iter().map(|&x| (x - j::<f64>()) * cr(0.5)));
            form.unimodular_objective(&u) - 2.0 * form.objective(&qv)
        })
        .collect();
    let spread = spread(&diffs);
    let scale = diffs[0].abs().max(1.0);
    Ok((spread < 1e-9 * scale, format!("difference spread {spread:.3e}")))
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

fn random_problem(seed: u64, n: usize) -> Result<(CVec<f64>, CMat<f64>, SdpProblem<f64>)> {
    let mut rng = rng_from_seed(seed);
    let xi = CVec::from_fn(n, |_, _| complex_normal::<f64, _>(&mut rng, 1.0));
    let b = CMat::from_fn(n, n, |_, _| complex_normal::<f64, _>(&mut rng, 1.0));
    let psi = &b * b.adjoint();
    let problem = SdpProblem::from_quadratic(&xi, &psi)?;
    Ok((xi, psi, problem))
}

fn sdp_checks(seed: u64) -> Result<[(bool, String); 4]> {
    let mut bound_worst = f64::NEG_INFINITY;
    let mut diag = 0f64;
    let mut eig = f64::INFINITY;
    let mut phase_spread = 0f64;
    let mut deterministic = true;
    for case in 0..4u64 {
        let n = 6 + 4 * case as usize;
        let (xi, psi, problem) = random_problem(derive_seed(seed, &[6, case]), n)?;
        let sol = solve_sdp(&problem, &SdpOptions::default(), None)?;
        diag = diag.max(sol.stats.diag_residual);
        eig = eig.min(min_eigenvalue(&sol.u));
        let mut rng = rng_from_seed(derive_seed(seed, &[7, case]));
        let mut diffs = Vec::new();
        for _ in 0..100 {
            let u = random_unimodular(n, &mut rng);
            let r1 = problem.rank_one_objective(&u);
            bound_worst = bound_worst.max(r1 - sol.objective);
            let uv = CVec::from_column_slice(&u);
            let ones = CVec::from_element(n, cr(1.0));
            let link = &xi * cr(2.0) + &psi * ones * j::<f64>();
            let g = crate::linalg::re_inner(&link, &uv) - 0.5 * crate::linalg::re_inner(&uv, &(&psi * &uv));
            diffs.push(r1 - g);
        }
        phase_spread = phase_spread.max(spread(&diffs));
        let a = extract_rank_one(&problem, &sol.factor, 50, &mut rng_from_seed(case));
        let b = extract_rank_one(&problem, &sol.factor, 50, &mut rng_from_seed(case));
        deterministic &= a == b;
    }
    Ok([
        (bound_worst <= 1e-6, format!("max tr(U'V) - tr(UV) = {bound_worst:.3e}")),
        (diag < 1e-6 && eig > -1e-8, format!("diag residual {diag:.2e}, min eigenvalue {eig:.2e}")),
        (phase_spread < 1e-9, format!("difference spread {phase_spread:.3e}")),
        (deterministic, "repeated extraction with equal seeds".into()),
    ])
}

fn bussgang_orthogonality(seed: u64) -> Result<(bool, String)> {
    let (config, channel) = instance(seed, 2, 3, 4, 5.0)?;
    let mut rng = rng_from_seed(derive_seed(seed, &[8]));
    let q = AnalogCombiner::random(3, 4, &mut rng);
    let spec = make_uniform_quantizer(Resolution::Finite(2), 1.0)?;
    let stats = bussgang_stats(&channel, &config, &q, &spec, StatsMode::Exact)?;
    let t = 40_000;
    let batch = transmit(&channel, &config, t, derive_seed(seed, &[9]))?;
    let y = q.matrix() * channel.a_matrix() * &batch.received;
    let mut worst = 0f64;
    for i in 0..3 {
        let std = (stats.c_y[(i, i)].re / 2.0).sqrt();
        let chain = spec.rescaled(std);
        let row = y.rows(i, 1).into_owned();
        let z = quantize_complex(&chain, &row);
        let g = &z - &row * stats.f_b[(i, i)];
        let corr = (g.component_mul(&row.map(|x| x.conj())).sum() / cr(t as f64)).norm();
        worst = worst.max(corr / stats.c_y[(i, i)].re);
    }
    Ok((worst < 0.02, format!("max |E[g y*]| / E|y|^2 = {worst:.3e}")))
}

fn tiny_plan(seed: u64) -> ExperimentPlan {
    let mut plan = ExperimentPlan::from_profile(Profile::Desk, Sweep::Snr);
    plan.fixed = RawConfig::new(2, 3, 4);
    plan.sweep_values = vec![0.0, 10.0];
    plan.bits_list = vec![Resolution::Finite(1), Resolution::Infinite];
    plan.trials = 2;
    plan.symbols_per_trial = 1000;
    plan.base_seed = seed;
    plan.design.iter_max = 3;
    plan
}

fn determinism_and_round_trip(seed: u64) -> Result<[(bool, String); 2]> {
    let plan = tiny_plan(seed);
    let render = |p: &ExperimentPlan| -> Result<(Vec<u8>, Vec<super::ExperimentRecord>)> {
        let records: Vec<_> = run_experiment(p)?.into_iter().map(|r| r.record).collect();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf, Path::new("memory"))?;
        Ok((buf, records))
    };
    let (a, records) = render(&plan)?;
    let (b, _) = render(&plan)?;
    let text = String::from_utf8_lossy(&a).into_owned();
    let back = parse_csv_str(&text, Path::new("memory"))?;
    Ok([
        (a == b, format!("{} bytes, identical on rerun", a.len())),
        (back == records, format!("{} records", records.len())),
    ])
}

/// Runs every property and returns one report per property, in a fixed order.
pub fn run_validation(seed: u64) -> Vec<PropertyReport> {
    let mut out = vec![report("w-optimality", w_optimality(seed))];
    match design_runs(seed) {
        Ok(runs) => {
            out.push(report("monotone-ao", Ok(monotone_ao(&runs))));
            out.push(report("mse-range", Ok(mse_range(&runs))));
        }
        Err(e) => {
            for name in ["monotone-ao", "mse-range"] {
                out.push(PropertyReport { name, passed: false, detail: format!("error: {e}") });
            }
        }
    }
    out.push(report("lorentzian-feasibility", lorentzian(seed)));
    out.push(report("objective-equivalence", objective_equivalence(seed)));
    match sdp_checks(seed) {
        Ok([bound, feas, phase, det]) => {
            out.push(report("relaxation-bound", Ok(bound)));
            out.push(report("sdp-feasibility", Ok(feas)));
            out.push(report("phase-shift-structure", Ok(phase)));
            out.push(report("extraction-determinism", Ok(det)));
        }
        Err(e) => {
            for name in ["relaxation-bound", "sdp-feasibility", "phase-shift-structure", "extraction-determinism"] {
                out.push(PropertyReport { name, passed: false, detail: format!("error: {e}") });
            }
        }
    }
    out.push(report("bussgang-orthogonality", bussgang_orthogonality(seed)));
    match determinism_and_round_trip(seed) {
        Ok([det, rt]) => {
            out.push(report("experiment-determinism", Ok(det)));
            out.push(report("csv-round-trip", Ok(rt)));
        }
        Err(e) => {
            for name in ["experiment-determinism", "csv-round-trip"] {
                out.push(PropertyReport { name, passed: false, detail: format!("error: {e}") });
            }
        }
    }
    out
}

