mod common;

use common::{monte_carlo_gain, C64};
use dma_core::design::AnalogCombiner;
use dma_core::linalg::min_eigenvalue;
use dma_core::model::{make_config, sample_channel, RawConfig};
use dma_core::quantizer::{
    bussgang_stats, large_k_chain_variance, make_uniform_quantizer, optimal_uniform_step, rho_b_closed_form,
    uniform_gaussian_distortion, Resolution, StatsMode,
};
use dma_core::seed::rng_from_seed;
use dma_core::SystemConfig64;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn closed_form_gain_matches_monte_carlo() {
    // three modeled variances: (N_e, K, Γ)
    let settings = [(8usize, 4usize, 1.0f64), (20, 50, 10f64.powf(0.5)), (200, 40, 0.1)];
    for (si, &(ne, k, gamma)) in settings.iter().enumerate() {
        let std = (ne as f64 * (k as f64 * gamma + 1.0) / 4.0).sqrt();
        for b in 1..=3 {
            let spec = make_uniform_quantizer(Resolution::Finite(b), 1.0).unwrap();
            let rho = rho_b_closed_form(Resolution::Finite(b), ne, k, gamma, &spec).unwrap();
            let mc = monte_carlo_gain(&spec.rescaled(std), std, 4_000_000, 100 + si as u64 * 10 + b as u64);
            assert!((rho - mc).abs() < 1e-3, "b={b} setting {si}: closed {rho} mc {mc}");
        }
    }
}

#[test]
fn mmse_one_bit_gain_is_two_over_pi() {
    for std in [0.3, 1.0, 7.0] {
        let spec = make_uniform_quantizer(Resolution::Finite(1), std).unwrap();
        let level = spec.levels()[1];
        assert!((level - std * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-6 * std);
        let mc = monte_carlo_gain(&spec, std, 1_000_000, 7);
        assert!((mc - 2.0 / std::f64::consts::PI).abs() < 1e-3, "{mc}");
    }
}

fn desk(k: usize, nv: usize, ne: usize) -> SystemConfig64 {
    make_config(&RawConfig::new(k, nv, ne).with_snr_db(5.0)).unwrap()
}

#[test]
fn exact_output_power_matches_simulation() {
    let cfg = desk(1, 1, 4);
    let ch = sample_channel(&cfg, 3);
    let q = AnalogCombiner::random(1, 4, &mut rng_from_seed(4));
    let mut rng = rng_from_seed(5);
    for b in [1, 2, 3] {
        let spec = make_uniform_quantizer(Resolution::Finite(b), 1.0).unwrap();
        let stats = bussgang_stats(&ch, &cfg, &q, &spec, StatsMode::Exact).unwrap();
        let cy = stats.c_y[(0, 0)].re;
        let chain = spec.rescaled((cy / 2.0).sqrt());
        let n = 1_000_000;
        let mut power = 0.0;
        for _ in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let s = (cy / 2.0).sqrt();
            let z = C64::new(chain.quantize(s * re), chain.quantize(s * im));
            power += z.norm_sqr();
        }
        power /= n as f64;
        let model = stats.c_z[(0, 0)].re;
        assert!(((power - model) / model).abs() < 0.01, "b={b}: {power} vs {model}");
    }
}

#[test]
fn distortion_is_uncorrelated_with_input() {
    // C_y ∝ I: one real dimension with the large-K modeled variance
    let cfg = desk(4, 2, 8);
    let var = large_k_chain_variance(&cfg);
    let std = (var / 2.0).sqrt();
    let mut rng = rng_from_seed(21);
    for b in [1, 2, 3] {
        let spec = make_uniform_quantizer(Resolution::Finite(b), 1.0).unwrap();
        let rho = rho_b_closed_form(Resolution::Finite(b), 8, 4, cfg.gamma_av(), &spec).unwrap();
        let chain = spec.rescaled(std);
        let n = 1_000_000;
        let mut corr = C64::new(0.0, 0.0);
        for _ in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let y = C64::new(std * re, std * im);
            let z = C64::new(chain.quantize(y.re), chain.quantize(y.im));
            corr += (z - y * rho) * y.conj();
        }
        let corr = corr.norm() / n as f64;
        // normalized by the entry scale
        assert!(corr < 5e-3 * var, "b={b}: |E[g y*]| = {corr}, var {var}");
    }
}

#[test]
fn infinite_resolution_stats_are_unquantized() {
    let cfg = desk(2, 3, 4);
    let ch = sample_channel(&cfg, 8);
    let q = AnalogCombiner::random(3, 4, &mut rng_from_seed(9));
    let spec = make_uniform_quantizer(Resolution::Infinite, 1.0).unwrap();
    for mode in [StatsMode::Exact, StatsMode::LargeK] {
        let s = bussgang_stats(&ch, &cfg, &q, &spec, mode).unwrap();
        assert_eq!(s.rho_b, 1.0);
        assert!((&s.c_z - &s.c_y).norm() < 1e-12);
        assert_eq!(s.c_g.norm(), 0.0);
        assert!((s.f_b.clone() - nalgebra::DMatrix::identity(3, 3)).norm() == 0.0);
    }
}

#[test]
fn large_k_distortion_is_scaled_identity() {
    let cfg = desk(4, 3, 8);
    let ch = sample_channel(&cfg, 1);
    let q = AnalogCombiner::random(3, 8, &mut rng_from_seed(2));
    let spec = make_uniform_quantizer(Resolution::Finite(2), 1.0).unwrap();
    let s = bussgang_stats(&ch, &cfg, &q, &spec, StatsMode::LargeK).unwrap();
    let expected = (1.0 - s.rho_b * s.rho_b) * large_k_chain_variance(&cfg);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { expected } else { 0.0 };
            assert!((s.c_g[(i, j)].re - want).abs() < 1e-12 && s.c_g[(i, j)].im == 0.0);
        }
        assert_eq!(s.f_b[(i, i)].re, s.rho_b);
    }
    assert!(s.rho_b > 0.0 && s.rho_b <= 1.0);
}

#[test]
fn covariances_are_consistent_and_psd() {
    let cfg = desk(3, 4, 4);
    let ch = sample_channel(&cfg, 31);
    let q = AnalogCombiner::random(4, 4, &mut rng_from_seed(32));
    for b in [1, 2, 3] {
        let spec = make_uniform_quantizer(Resolution::Finite(b), 1.0).unwrap();
        for mode in [StatsMode::Exact, StatsMode::LargeK] {
            let s = bussgang_stats(&ch, &cfg, &q, &spec, mode).unwrap();
            let rebuilt = &s.f_b * &s.c_y * s.f_b.adjoint() + &s.c_g;
            assert!((&rebuilt - &s.c_z).norm() < 1e-10 * s.c_z.norm());
            for m in [&s.c_y, &s.c_z, &s.c_g] {
                assert!(min_eigenvalue(m) >= -1e-10 * m.norm().max(1.0));
            }
        }
    }
}

/// `E[(x − Q(x))²]` for unit normal x by composite Simpson on each cell,
/// truncated at ±12.
fn distortion_by_quadrature(bits: u32, step: f64) -> f64 {
    let n = 1usize << bits;
    let half = (n / 2) as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { -12.0 } else { (i as f64 - half) * step };
            let hi = if i == n - 1 { 12.0 } else { (i as f64 + 1.0 - half) * step };
            let level = (i as f64 - half + 0.5) * step;
            let f = |x: f64| (x - level).powi(2) * pdf(x);
            let m = 4000;
            let h = (hi - lo) / m as f64;
            let inner: f64 = (1..m).map(|j| if j % 2 == 1 { 4.0 } else { 2.0 } * f(lo + j as f64 * h)).sum();
            h / 3.0 * (f(lo) + inner + f(hi))
        })
        .sum()
}

#[test]
fn optimal_step_minimizes_quadrature_distortion() {
    for b in 1..=4 {
        let step = optimal_uniform_step(b).unwrap();
        let at = distortion_by_quadrature(b, step);
        assert!((at - uniform_gaussian_distortion(b, step)).abs() < 1e-10, "b={b}");
        for d in [1e-3, 1e-2] {
            assert!(distortion_by_quadrature(b, step - d) > at && distortion_by_quadrature(b, step + d) > at, "b={b}");
        }
    }
}
