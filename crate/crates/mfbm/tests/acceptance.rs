//! End-to-end acceptance gate: ten numbered criteria covering the
//! closed-form constants, asymptotic theory, Monte Carlo behavior of
//! the estimators and tests, forecast theory and calibration, the
//! structural property suite, and the rolling empirical pipeline.
//!
//! Each criterion is one test that prints a single summary line (run
//! with `--nocapture` to see the measured values).

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mfbm::estimate::{avar_eta, avar_hurst, avar_rho};
use mfbm::experiments::{
    run_estimator_comparison, run_estimator_mc, run_forecast_mc, run_rolling_empirical,
    run_size_power, synthetic_rv_panel, ComparisonSpec, EstimatorMcSpec, ForecastCase,
    ForecastMcSpec, RollingSpec, SizePowerSpec,
};
use mfbm::ac::Filter;
use mfbm::forecast::{
    forecast_one_obs, forecast_one_obs_bivariate, msfe_exchangeable, msfe_univariate_one_obs,
    ForecastEngine,
};
use mfbm::kernel::{cross_cov, increment_cov, rho_max, ModelParams};
use mfbm::linalg::Mat;

const DELTA: f64 = 1.0 / 250.0;

/// The bivariate design used throughout the simulation studies:
/// rough first component, smooth second, moderate correlation.
fn study_params(rho: f64, eta: f64) -> ModelParams {
    ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, rho, eta).unwrap()
}

#[test]
fn criterion_01_correlation_bound_constants() {
    let start = Instant::now();
    let a: f64 = rho_max(0.2, 0.8);
    let b: f64 = rho_max(0.1, 0.9);
    let elapsed = start.elapsed();
    assert!((a - 0.662).abs() <= 0.001, "rho_max(0.2,0.8) = {a}");
    assert!((b - 0.383).abs() <= 0.001, "rho_max(0.1,0.9) = {b}");
    assert!(
        elapsed.as_micros() < 1000,
        "rho_max took {elapsed:?}, expected < 1 ms"
    );
    println!("criterion 01 PASS: rho_max(0.2,0.8)={a:.6}, rho_max(0.1,0.9)={b:.6} in {elapsed:?}");
}

#[test]
fn criterion_02_asymptotic_standard_errors() {
    let start = Instant::now();
    let se_h = (avar_hurst(0.1).unwrap() / 500.0).sqrt();
    let se_r = (avar_rho(0.1, 0.4, 0.4).unwrap() / 500.0).sqrt();
    let se_e = (avar_eta(0.1, 0.4, 0.0).unwrap() / 500.0).sqrt();
    let elapsed = start.elapsed();
    assert!((se_h - 0.0431).abs() <= 0.0002, "hurst SE {se_h}");
    assert!((se_r - 0.0394).abs() <= 0.0002, "rho SE {se_r}");
    assert!((se_e - 0.1137).abs() <= 0.0005, "eta SE {se_e}");
    assert!(elapsed.as_secs_f64() < 1.0, "AVAR series took {elapsed:?}");
    println!(
        "criterion 02 PASS: SEs at n=500 = {se_h:.4}/{se_r:.4}/{se_e:.4} in {elapsed:?}"
    );
}

#[test]
fn criterion_03_estimator_monte_carlo() {
    let spec = EstimatorMcSpec {
        params: study_params(0.4, 0.0),
        cells: vec![(1000, DELTA)],
        replications: 1000,
        seed: 0xACC3,
    };
    let report = run_estimator_mc(&spec).unwrap();
    assert_eq!(report.failures, 0);
    let get = |row: &str, col: &str| {
        report
            .value("estimates", &format!("n=1000,delta={DELTA}:{row}"), col)
            .unwrap()
    };
    let checks = [("H1", 0.0306), ("rho_12", 0.0280), ("eta_12", 0.0744)];
    for (row, expected) in checks {
        let std = get(row, "std");
        assert!(
            (std / expected - 1.0).abs() <= 0.20,
            "{row}: std {std} vs expected {expected} ± 20%"
        );
        let bias = get(row, "bias");
        let mc_se = get(row, "mc_se");
        assert!(
            bias.abs() <= 2.0 * mc_se,
            "{row}: bias {bias} vs 2×MC-SE {}",
            2.0 * mc_se
        );
    }
    println!(
        "criterion 03 PASS: std Ĥ₁={:.4} ρ̂={:.4} η̂={:.4} (expected 0.0306/0.0280/0.0744), all |bias| ≤ 2 MC SE",
        get("H1", "std"),
        get("rho_12", "std"),
        get("eta_12", "std")
    );
}

#[test]
fn criterion_04_size_and_power() {
    let spec = SizePowerSpec {
        hurst: (0.1, 0.4),
        sigma2: (1.0, 1.0),
        rho: 0.4,
        etas: vec![0.0, 0.3],
        ns: vec![1000],
        delta: DELTA,
        alphas: vec![0.01],
        replications: 2000,
        seed: 0xACC4,
    };
    let report = run_size_power(&spec).unwrap();
    let size = report
        .value("rejection_rates", "n=1000,eta=0", "reject_at_0.01")
        .unwrap();
    let power = report
        .value("rejection_rates", "n=1000,eta=0.3", "reject_at_0.01")
        .unwrap();
    assert!(
        (0.006..=0.022).contains(&size),
        "size at 1% = {size}, expected within [0.006, 0.022]"
    );
    assert!(power >= 0.88, "power at eta=0.3 = {power}, expected ≥ 0.88");
    println!("criterion 04 PASS: size(1%)={size:.4} ∈ [0.006,0.022], power(η=0.3)={power:.4} ≥ 0.88");
}

#[test]
fn criterion_05_theoretical_rmsfe_values() {
    let uni = ForecastEngine::new(study_params(0.0, 0.0).component(0).unwrap(), 500, DELTA)
        .unwrap();
    let rmsfe_uni = uni.msfe(0, 1).unwrap().sqrt();
    assert!(
        (rmsfe_uni - 0.4802).abs() <= 0.0005,
        "univariate RMSFE {rmsfe_uni}"
    );
    let biv = ForecastEngine::new(study_params(0.8, 0.0), 500, DELTA).unwrap();
    let rmsfe_biv = biv.msfe(0, 1).unwrap().sqrt();
    assert!(
        (rmsfe_biv - 0.4246).abs() <= 0.0005,
        "bivariate RMSFE {rmsfe_biv}"
    );
    println!(
        "criterion 05 PASS: theoretical RMSFE univariate {rmsfe_uni:.4} (0.4802), bivariate ρ=0.8 {rmsfe_biv:.4} (0.4246)"
    );
}

#[test]
fn criterion_06_forecast_monte_carlo_calibration() {
    let spec = ForecastMcSpec {
        cases: vec![ForecastCase {
            label: "rho=0.8".into(),
            params: study_params(0.8, 0.0),
            targets: vec![0, 1],
            variants: vec![1, 2],
        }],
        t: 500,
        horizons: vec![1, 2, 3, 4, 5],
        delta: DELTA,
        replications: 2000,
        seed: 0xACC6,
    };
    let report = run_forecast_mc(&spec).unwrap();
    let table = report.table("rmsfe").unwrap();
    assert_eq!(table.rows.len(), 20); // 2 targets × 2 variants × 5 horizons
    let mut worst = 0.0f64;
    for row in &table.rows {
        let (emp, theory, se) = (row.values[0], row.values[1], row.values[2]);
        let z = (emp - theory).abs() / se;
        worst = worst.max(z);
        assert!(
            z <= 3.0,
            "{}: empirical {emp:.4} vs theoretical {theory:.4} is {z:.2} MC SEs",
            row.label
        );
    }
    println!(
        "criterion 06 PASS: all 20 cells within 3 MC SEs of theory (worst |z| = {worst:.2})"
    );
}

#[test]
fn criterion_07_property_suite() {
    // (a) Telescoping: level covariances equal double sums of
    // increment covariances to 1e−12.
    let p = ModelParams::bivariate(0.12, 0.43, 1.3, 0.7, 0.35, 0.15).unwrap();
    let mut worst_tel = 0.0f64;
    for &delta in &[DELTA, 0.25] {
        for i in 0..2 {
            for j in 0..2 {
                for k in 1..=20i64 {
                    for l in 1..=20i64 {
                        let level = cross_cov(&p, i, j, k as f64 * delta, l as f64 * delta);
                        let mut sum = 0.0;
                        for a in 1..=k {
                            for b in 1..=l {
                                sum += increment_cov(&p, i, j, delta, a, b);
                            }
                        }
                        worst_tel = worst_tel.max((level - sum).abs());
                    }
                }
            }
        }
    }
    assert!(worst_tel <= 1e-12, "telescoping error {worst_tel}");

    // (b) Unifractional equivalence: with one shared Hurst exponent
    // the multivariate predictor collapses onto the univariate one,
    // for conditioning lengths up to 20 and dimensions up to 4.
    let mut worst_unif = 0.0f64;
    for d in 2..=4usize {
        let mut rho = Mat::identity(d);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    rho.set(i, j, 0.5 / (d - 1) as f64 + 0.1);
                }
            }
        }
        let sig: Vec<f64> = (0..d).map(|i| 0.8 + 0.3 * i as f64).collect();
        let params = ModelParams::new(vec![0.3; d], sig, rho, Mat::zeros(d, d)).unwrap();
        for t in [1usize, 5, 20] {
            let multi = ForecastEngine::new(params.clone(), t, DELTA).unwrap();
            let uni =
                ForecastEngine::new(params.component(0).unwrap(), t, DELTA).unwrap();
            for h in [1usize, 3] {
                let (a, b) = (multi.msfe(0, h).unwrap(), uni.msfe(0, h).unwrap());
                worst_unif = worst_unif.max((a - b).abs() / b);
                let w = multi.weights(0, h).unwrap();
                for (idx, wt) in w.weights.iter().enumerate() {
                    if idx % d != 0 {
                        worst_unif = worst_unif.max(wt.abs());
                    }
                }
            }
        }
    }
    assert!(worst_unif <= 1e-8, "unifractional equivalence error {worst_unif}");

    // (c) Closed forms against the generic solver over 200 seeded
    // random valid draws (100 bivariate, 100 multi-component).
    let mut rng = StdRng::seed_from_u64(0xACC7);
    let mut worst_closed = 0.0f64;
    for _ in 0..100 {
        let h1: f64 = rng.gen_range(0.06..0.94);
        let h2: f64 = rng.gen_range(0.06..0.94);
        let rho = rng.gen_range(-0.9..0.9) * rho_max(h1, h2).min(1.0);
        let p = ModelParams::bivariate(
            h1,
            h2,
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
            rho,
            0.0,
        )
        .unwrap();
        let t: f64 = rng.gen_range(0.2..4.0);
        let m = rng.gen_range(1..4usize);
        let closed = forecast_one_obs_bivariate(&p, t, m as f64 * t).unwrap();
        let engine = ForecastEngine::new(p, 1, t).unwrap();
        let w = engine.weights(0, m).unwrap();
        worst_closed = worst_closed
            .max((w.weights[0] - closed.w_own).abs() / closed.w_own.abs().max(1.0))
            .max((w.weights[1] - closed.w_cross).abs() / closed.w_cross.abs().max(1.0))
            .max((w.msfe - closed.msfe).abs() / closed.msfe.max(1e-12));
    }
    for _ in 0..100 {
        let d = rng.gen_range(2..=4usize);
        let hurst: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..0.9)).collect();
        let mut rho = Mat::identity(d);
        let off = rng.gen_range(-0.25..0.4);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    rho.set(i, j, off);
                }
            }
        }
        let sig: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..3.0)).collect();
        let p = match ModelParams::new(hurst, sig, rho, Mat::zeros(d, d)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let t: f64 = rng.gen_range(0.2..4.0);
        let m = rng.gen_range(1..4usize);
        let j = rng.gen_range(0..d);
        let (wv, msfe) = match forecast_one_obs(&p, j, t, m as f64 * t) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let engine = match ForecastEngine::new(p, 1, t) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let w = engine.weights(j, m).unwrap();
        for (a, b) in wv.iter().zip(&w.weights) {
            worst_closed = worst_closed.max((a - b).abs() / a.abs().max(1.0));
        }
        worst_closed = worst_closed.max((msfe - w.msfe).abs() / msfe.max(1e-12));
    }
    assert!(worst_closed <= 1e-10, "closed-form error {worst_closed}");

    // (d) The target's MSFE is bit-exactly independent of the other
    // component's variance.
    for _ in 0..50 {
        let h1: f64 = rng.gen_range(0.06..0.94);
        let h2: f64 = rng.gen_range(0.06..0.94);
        let rho = rng.gen_range(-0.9..0.9) * rho_max(h1, h2).min(1.0);
        let t: f64 = rng.gen_range(0.2..4.0);
        let h: f64 = rng.gen_range(0.1..3.0);
        let pa = ModelParams::bivariate(h1, h2, 1.4, rng.gen_range(0.1..5.0), rho, 0.0).unwrap();
        let pb = ModelParams::bivariate(h1, h2, 1.4, rng.gen_range(0.1..5.0), rho, 0.0).unwrap();
        let (ma, mb) = (
            forecast_one_obs_bivariate(&pa, t, h).unwrap().msfe,
            forecast_one_obs_bivariate(&pb, t, h).unwrap().msfe,
        );
        assert_eq!(ma.to_bits(), mb.to_bits(), "MSFE depends on sigma_2");
    }

    // (e) Gain non-negativity over a parameter grid.
    for h1 in [0.1f64, 0.3, 0.7] {
        for h2 in [0.2f64, 0.5, 0.85] {
            for frac in [-0.8, -0.3, 0.3, 0.8] {
                let rho = frac * rho_max(h1, h2).min(1.0);
                let p = ModelParams::bivariate(h1, h2, 1.0, 2.0, rho, 0.0).unwrap();
                for t in [1usize, 8] {
                    let multi = ForecastEngine::new(p.clone(), t, DELTA).unwrap();
                    let uni =
                        ForecastEngine::new(p.component(0).unwrap(), t, DELTA).unwrap();
                    for h in [1usize, 4] {
                        let (a, b) = (multi.msfe(0, h).unwrap(), uni.msfe(0, h).unwrap());
                        assert!(
                            a <= b * (1.0 + 1e-10),
                            "gain negative at H=({h1},{h2}) rho={rho} t={t} h={h}: {a} > {b}"
                        );
                    }
                }
            }
        }
    }
    println!(
        "criterion 07 PASS: telescoping ≤ {worst_tel:.2e}, unifractional ≤ {worst_unif:.2e}, closed-form ≤ {worst_closed:.2e}, σ₂-independence bit-exact, gains non-negative"
    );
}

#[test]
fn criterion_08_dimension_limit_of_the_relative_msfe() {
    // Exchangeable design: rough target among smooth components, all
    // pairs equally correlated at 0.8.
    let (h_target, h_other, rho) = (0.4, 0.1, 0.8);
    let ratio = |d: usize, t: f64| -> f64 {
        let multi = msfe_exchangeable(d, rho, h_target, h_other, t, 1.0).unwrap();
        let uni = msfe_univariate_one_obs(h_target, 1.0, t, 1.0);
        multi / uni
    };
    let r1 = ratio(1000, 1.0);
    let r10 = ratio(1000, 10.0);
    assert!((r1 - 0.89).abs() <= 0.005, "d=1000 ratio at t=1: {r1}");
    assert!((r10 - 0.774).abs() <= 0.005, "d=1000 ratio at t=10: {r10}");
    // The curve flattens: successive increments shrink with d.
    let steps = [
        ratio(10, 1.0) - ratio(100, 1.0),
        ratio(100, 1.0) - ratio(500, 1.0),
        ratio(500, 1.0) - ratio(1000, 1.0),
    ];
    assert!(
        steps[0] > steps[1] && steps[1] > steps[2] && steps[2] >= 0.0,
        "curve not flattening: {steps:?}"
    );
    println!(
        "criterion 08 PASS: d=1000 relative MSFE {r1:.4} (t=1) / {r10:.4} (t=10), flattening steps {steps:?}"
    );
}

#[test]
fn criterion_09_filter_baseline_comparison() {
    let spec = ComparisonSpec {
        configs: vec![("rho=0.4,eta=0".into(), study_params(0.4, 0.0))],
        n: 1000,
        delta: DELTA,
        replications: 1000,
        seed: 0xACC9,
        filter: Filter::second_difference(),
    };
    let report = run_estimator_comparison(&spec).unwrap();
    let get = |name: &str| {
        report
            .value("comparison", &format!("rho=0.4,eta=0:{name}"), "rmse")
            .unwrap()
    };
    let eta_ratio = get("filter_eta") / get("closed_eta");
    let rho_ratio = get("filter_rho") / get("closed_rho");
    assert!(
        eta_ratio >= 2.0,
        "filter-based η RMSE should be ≥ 2× the closed form, got {eta_ratio:.2}×"
    );
    assert!(
        (0.8..=1.3).contains(&rho_ratio),
        "ρ RMSE ratio {rho_ratio:.2} outside [0.8, 1.3]"
    );
    println!(
        "criterion 09 PASS: η RMSE ratio {eta_ratio:.2}× (≥ 2), ρ RMSE ratio {rho_ratio:.2} ∈ [0.8, 1.3]"
    );
}

#[test]
fn criterion_10_rolling_empirical_pipeline() {
    // Heterogeneous five-asset panel: rough target, smooth peers,
    // moderate correlation — the multivariate model must win (or tie)
    // at every horizon.
    let d = 5;
    let mut rho = Mat::identity(d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                rho.set(i, j, 0.42);
            }
        }
    }
    let mut hurst = vec![0.7; d];
    hurst[0] = 0.1;
    let het =
        ModelParams::new(hurst, vec![1.0; d], rho.clone(), Mat::zeros(d, d)).unwrap();
    let rv = synthetic_rv_panel(&het, 740, DELTA, -4.0, 0xACCA).unwrap();
    let mut spec = RollingSpec::new(300, vec![1, 2, 3, 4, 5], d, DELTA);
    spec.har = false;
    spec.dims = vec![1, 5];
    spec.stride = 3;
    let report = run_rolling_empirical(&spec, &rv).unwrap();
    let mut ratios = Vec::new();
    for h in 1..=5 {
        let col = format!("h={h}");
        let uni = report.value("rmsfe", "fBm", &col).unwrap();
        let multi = report.value("rmsfe", "mfBm5", &col).unwrap();
        assert!(
            multi <= uni,
            "h={h}: multivariate RMSFE {multi} exceeds univariate {uni}"
        );
        ratios.push(multi / uni);
    }

    // Unifractional panel: the multivariate model has nothing to add;
    // the two must agree within 2 MC SEs of the paired difference.
    let unif = ModelParams::new(vec![0.3; d], vec![1.0; d], rho, Mat::zeros(d, d)).unwrap();
    let rv_u = synthetic_rv_panel(&unif, 740, DELTA, -4.0, 0xACCB).unwrap();
    let report_u = run_rolling_empirical(&spec, &rv_u).unwrap();
    let mut worst_z = 0.0f64;
    for h in 1..=5 {
        let col = format!("h={h}");
        let diff = report_u.value("msfe_diff", "mfBm5", &col).unwrap();
        let se = report_u.value("msfe_diff_se", "mfBm5", &col).unwrap();
        let z = diff.abs() / se;
        worst_z = worst_z.max(z);
        assert!(
            z <= 2.0,
            "h={h}: unifractional MSFE difference {diff} is {z:.2} MC SEs (se {se})"
        );
    }
    println!(
        "criterion 10 PASS: heterogeneous multivariate/univariate RMSFE ratios {:?} all ≤ 1; unifractional worst |z| = {worst_z:.2}",
        ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
}
