//! Monte Carlo oracles feeding the closed forms and the fitters.

use isl_core::correlated::{
    error_correlation_matrix, eigen_spectrum, estimate_kappa, pass_at_k_correlated,
};
use isl_core::coverage::pass_at_k_exact;
use isl_core::curve::log_spaced_ks;
use isl_core::fitting::{fit_beta_model, BetaBounds, Objective};
use isl_core::io::{read_curve_csv, read_trial_matrix_csv, write_curve_csv, write_trial_matrix_csv};
use isl_core::simulator::{sample_failure_probs, simulate_correlated, simulate_independent};
use isl_core::{BetaFailureModel, CorrelatedTrialModel, CoverageCurve, ModelSpec, SimConfig};

fn subsample(curve: &CoverageCurve, ks: &[u64]) -> CoverageCurve {
    let pts = ks.iter().map(|&k| curve.points()[k as usize - 1]).collect();
    CoverageCurve::new(pts, curve.label.clone()).unwrap()
}

#[test]
fn simulated_curve_refits_to_generating_parameters() {
    let spec: ModelSpec = "beta:2,0.5".parse().unwrap();
    let config = SimConfig::new(1_000_000, 1000, 7, spec).unwrap();
    let probs = sample_failure_probs(&config).unwrap();
    let sim = simulate_independent(&config, &probs, false).unwrap();

    // The curve survives a trip through its CSV form unchanged.
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &sim.empirical_curve).unwrap();
    let curve = read_curve_csv(buf.as_slice(), "sim").unwrap();
    assert_eq!(curve.points(), sim.empirical_curve.points());

    let curve = subsample(&curve, &log_spaced_ks(1, 1000, 25));
    let bounds = BetaBounds {
        ceiling: isl_core::fitting::Interval::new(0.0, 1.0),
        ..BetaBounds::default()
    };
    let fit = fit_beta_model(&curve, &bounds, Objective::LogComplement).unwrap();
    let [a, al, be] = fit.model.parameters();
    assert!((be - 0.5).abs() / 0.5 < 0.05, "beta {be}");
    assert!((al - 2.0).abs() / 2.0 < 0.15, "alpha {al}");
    assert!(a > 0.99, "ceiling {a}");
}

#[test]
fn independent_simulation_brackets_closed_form() {
    let n = 200_000;
    let model = BetaFailureModel::new(1.0, 0.5, 2.0).unwrap();
    let config = SimConfig::new(n, 100, 11, ModelSpec::Beta { alpha: 0.5, beta: 2.0 }).unwrap();
    let probs = sample_failure_probs(&config).unwrap();
    let sim = simulate_independent(&config, &probs, false).unwrap();
    for &k in &[1u64, 3, 10, 30, 100] {
        let exact = pass_at_k_exact(&model, k);
        let emp = sim.empirical_curve.points()[k as usize - 1].1;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((emp - exact).abs() <= 4.0 * se, "k={k}: {emp} vs {exact}");
    }
}

#[test]
fn correlated_generator_reduces_to_independent_trials() {
    let n = 100_000;
    let config = SimConfig::new(n, 16, 3, ModelSpec::Point { p: 0.7 }).unwrap();
    let sim = simulate_correlated(&config, 0.7, 0.0, false).unwrap();
    let model = CorrelatedTrialModel::new(1.0, 0.7, 0.0).unwrap();
    for &(k, emp) in sim.empirical_curve.points() {
        let exact = pass_at_k_correlated(&model, k).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((emp - exact).abs() <= 4.0 * se, "k={k}: {emp} vs {exact}");
    }
}

#[test]
fn latent_spectrum_recovers_kappa_through_csv() {
    for &kappa in &[0.8, 2.0] {
        let config = SimConfig::new(4000, 200, 42, ModelSpec::Point { p: 0.5 }).unwrap();
        let sim = simulate_correlated(&config, 0.5, kappa, true).unwrap();
        let latent = sim.latent.unwrap();

        let mut buf = Vec::new();
        write_trial_matrix_csv(&mut buf, &latent, true).unwrap();
        let back = read_trial_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back, latent);

        let spectrum = eigen_spectrum(&error_correlation_matrix(&back, false)).unwrap();
        let est = estimate_kappa(&spectrum, None).unwrap();
        assert!(
            (est.kappa - kappa).abs() / kappa < 0.1,
            "target {kappa}, estimated {} (r2 {})",
            est.kappa,
            est.r2
        );
    }
}
