//! Declarative experiment harnesses: estimator Monte Carlo, the
//! baseline-comparison study, size/power of the reversibility test,
//! forecast Monte Carlo, and the rolling-window empirical pipeline.
//!
//! Every experiment is a plain-data spec plus a `run` that produces an
//! [`ExperimentReport`] — labelled tables of numbers with a config
//! echo. Reports are bit-exact reproducible from (spec, seed):
//! replication seeds derive deterministically from the base seed and
//! parallel reductions preserve replication order.

use std::time::Instant;

use rayon::prelude::*;

use crate::ac::{ac_fit, Filter};
use crate::estimate::{
    avar_eta, avar_hurst, avar_rho, avar_sigma2, estimate_all, estimate_hurst, estimate_rho,
    estimate_sigma2, test_time_reversibility,
};
use crate::forecast::ForecastEngine;
use crate::har::{har_fit_forecast, vhar_fit_forecast};
use crate::kernel::{rho_max, ModelParams};
use crate::linalg::Mat;
use crate::simulate::{replication_seed, PathSampler, SamplePath};
use crate::{Error, Result};

/// One labelled row of an experiment table.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// A named table with a fixed column set.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Result of running an experiment: one or more tables plus the
/// configuration that produced them.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub kind: String,
    /// Key/value echo of the spec, emitted as comment headers on
    /// every serialization for provenance.
    pub config: Vec<(String, String)>,
    pub tables: Vec<ReportTable>,
    /// Replications (or windows) that errored and were excluded.
    pub failures: usize,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn new(kind: &str) -> Self {
        ExperimentReport {
            kind: kind.to_string(),
            config: Vec::new(),
            tables: Vec::new(),
            failures: 0,
            runtime_secs: 0.0,
        }
    }

    pub fn push_config(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn table(&self, name: &str) -> Option<&ReportTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Looks up a value by table, row label, and column name.
    pub fn value(&self, table: &str, row: &str, column: &str) -> Option<f64> {
        let t = self.table(table)?;
        let c = t.columns.iter().position(|x| x == column)?;
        let r = t.rows.iter().find(|r| r.label == row)?;
        r.values.get(c).copied()
    }
}

fn params_config(p: &ModelParams) -> Vec<(String, String)> {
    let d = p.d();
    let mut out = vec![
        ("d".into(), d.to_string()),
        (
            "hurst".into(),
            p.hursts().iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        ),
        (
            "sigma2".into(),
            p.sigma2s().iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        ),
    ];
    let mut rho = Vec::new();
    let mut eta = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            rho.push(p.rho(i, j).to_string());
            eta.push(p.eta(i, j).to_string());
        }
    }
    if d > 1 {
        out.push(("rho".into(), rho.join(",")));
        out.push(("eta".into(), eta.join(",")));
    }
    out
}

/// Sample mean / standard deviation / bias / RMSE of a replication
/// series against a known truth.
#[derive(Clone, Copy, Debug)]
struct Summary {
    bias: f64,
    std: f64,
    rmse: f64,
    /// Monte Carlo standard error of the bias (std/√R).
    mc_se: f64,
}

fn summarize(values: &[f64], truth: f64) -> Summary {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0).max(1.0);
    let mse = values.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / r;
    Summary {
        bias: mean - truth,
        std: var.sqrt(),
        rmse: mse.sqrt(),
        mc_se: (var / r).sqrt(),
    }
}

// ---------------------------------------------------------------------------
// Estimator Monte Carlo
// ---------------------------------------------------------------------------

/// Simulate → estimate loop over `(n, Δ)` cells, reporting bias,
/// standard deviation, RMSE, and the asymptotic SE evaluated at the
/// true parameters.
#[derive(Clone, Debug)]
pub struct EstimatorMcSpec {
    pub params: ModelParams,
    /// `(n, Δ)` cells; each gets its own block of rows.
    pub cells: Vec<(usize, f64)>,
    pub replications: usize,
    pub seed: u64,
}

pub fn run_estimator_mc(spec: &EstimatorMcSpec) -> Result<ExperimentReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidParams("need at least one replication".into()));
    }
    let start = Instant::now();
    let mut report = ExperimentReport::new("estimator-mc");
    for (k, v) in params_config(&spec.params) {
        report.push_config(&k, v);
    }
    report.push_config("replications", spec.replications);
    report.push_config("seed", spec.seed);
    report.push_config(
        "cells",
        spec.cells
            .iter()
            .map(|(n, dl)| format!("{n}@{dl}"))
            .collect::<Vec<_>>()
            .join(";"),
    );

    let d = spec.params.d();
    let mut table = ReportTable {
        name: "estimates".into(),
        columns: ["bias", "std", "rmse", "asy_se", "mc_se"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: Vec::new(),
    };
    let mut failures = 0usize;

    for (cell_idx, &(n, delta)) in spec.cells.iter().enumerate() {
        let sampler = PathSampler::new(spec.params.clone(), n, delta)?;
        let cell_seed = replication_seed(spec.seed, cell_idx as u64);
        let paths = sampler.sample_many(cell_seed, spec.replications);
        let reports: Vec<_> = paths
            .par_iter()
            .map(|path| estimate_all(path))
            .collect();

        // Column-major per-parameter replication series.
        let mut hurst = vec![Vec::new(); d];
        let mut sig = vec![Vec::new(); d];
        let mut rho = Vec::new();
        let mut eta = Vec::new();
        for _ in 0..d * (d - 1) / 2 {
            rho.push(Vec::new());
            eta.push(Vec::new());
        }
        for rep in reports {
            match rep {
                Ok(est) => {
                    for i in 0..d {
                        hurst[i].push(est.components[i].hurst);
                        sig[i].push(est.components[i].sigma2);
                    }
                    for (k, pair) in est.pairs.iter().enumerate() {
                        rho[k].push(pair.rho);
                        if let Some(e) = pair.eta {
                            eta[k].push(e);
                        }
                    }
                }
                Err(_) => failures += 1,
            }
        }

        let prefix = format!("n={n},delta={delta}");
        let sqrtn = (n as f64).sqrt();
        for i in 0..d {
            let h0 = spec.params.hurst(i);
            let s = summarize(&hurst[i], h0);
            let asy = (avar_hurst(h0)? / n as f64).sqrt();
            table.rows.push(ReportRow {
                label: format!("{prefix}:H{}", i + 1),
                values: vec![s.bias, s.std, s.rmse, asy, s.mc_se],
            });
            let s2 = summarize(&sig[i], spec.params.sigma2(i));
            let asy_sig = if delta < 1.0 {
                (1.0 / delta).ln() * (avar_sigma2(h0, spec.params.sigma2(i))? / n as f64).sqrt()
            } else {
                f64::NAN
            };
            table.rows.push(ReportRow {
                label: format!("{prefix}:sigma2_{}", i + 1),
                values: vec![s2.bias, s2.std, s2.rmse, asy_sig, s2.mc_se],
            });
        }
        let mut k = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                let (hi, hj) = (spec.params.hurst(i), spec.params.hurst(j));
                let r = summarize(&rho[k], spec.params.rho(i, j));
                let asy_r = (avar_rho(hi, hj, spec.params.rho(i, j))? / n as f64).sqrt();
                table.rows.push(ReportRow {
                    label: format!("{prefix}:rho_{}{}", i + 1, j + 1),
                    values: vec![r.bias, r.std, r.rmse, asy_r, r.mc_se],
                });
                let e = summarize(&eta[k], spec.params.eta(i, j));
                let asy_e = (avar_eta(hi, hj, spec.params.rho(i, j))? / n as f64).sqrt();
                table.rows.push(ReportRow {
                    label: format!("{prefix}:eta_{}{}", i + 1, j + 1),
                    values: vec![e.bias, e.std, e.rmse, asy_e, e.mc_se],
                });
                k += 1;
            }
        }
        let _ = sqrtn;
    }

    report.tables.push(table);
    report.failures = failures;
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Baseline comparison
// ---------------------------------------------------------------------------

/// Closed-form estimators against the filter-based baseline on the
/// same simulated paths, reporting per-parameter bias/std/RMSE for
/// both methods.
#[derive(Clone, Debug)]
pub struct ComparisonSpec {
    /// Labelled parameter configurations (one block of rows each).
    pub configs: Vec<(String, ModelParams)>,
    pub n: usize,
    pub delta: f64,
    pub replications: usize,
    pub seed: u64,
    /// Filter handed to the baseline. The second difference
    /// reproduces the published baseline's noise level.
    pub filter: Filter,
}

pub fn run_estimator_comparison(spec: &ComparisonSpec) -> Result<ExperimentReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidParams("need at least one replication".into()));
    }
    let start = Instant::now();
    let mut report = ExperimentReport::new("estimator-comparison");
    report.push_config("n", spec.n);
    report.push_config("delta", spec.delta);
    report.push_config("replications", spec.replications);
    report.push_config("seed", spec.seed);
    report.push_config(
        "filter",
        spec.filter
            .taps()
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );

    let mut table = ReportTable {
        name: "comparison".into(),
        columns: ["bias", "std", "rmse", "mc_se"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: Vec::new(),
    };
    let mut failures = 0usize;

    for (cfg_idx, (label, params)) in spec.configs.iter().enumerate() {
        if params.d() != 2 {
            return Err(Error::InvalidParams(
                "the comparison study is bivariate".into(),
            ));
        }
        let sampler = PathSampler::new(params.clone(), spec.n, spec.delta)?;
        let seed = replication_seed(spec.seed, cfg_idx as u64);
        let paths = sampler.sample_many(seed, spec.replications);
        let per_rep: Vec<_> = paths
            .par_iter()
            .map(|path| -> Result<[f64; 4]> {
                let r = estimate_rho(path, 0, 1)?;
                let e = crate::estimate::estimate_eta(path, 0, 1)?;
                let fit = ac_fit(path, &spec.filter, (1.0, 0.0, 0.0))?;
                Ok([r, e, fit.rho.get(0, 1), fit.eta.get(0, 1)])
            })
            .collect();

        let mut series = [const { Vec::new() }; 4];
        for rep in per_rep {
            match rep {
                Ok(vals) => {
                    for (s, v) in series.iter_mut().zip(vals) {
                        s.push(v);
                    }
                }
                Err(_) => failures += 1,
            }
        }
        let truth = [
            params.rho(0, 1),
            params.eta(0, 1),
            params.rho(0, 1),
            params.eta(0, 1),
        ];
        for (k, name) in ["closed_rho", "closed_eta", "filter_rho", "filter_eta"]
            .iter()
            .enumerate()
        {
            let s = summarize(&series[k], truth[k]);
            table.rows.push(ReportRow {
                label: format!("{label}:{name}"),
                values: vec![s.bias, s.std, s.rmse, s.mc_se],
            });
        }
    }

    report.tables.push(table);
    report.failures = failures;
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Size and power of the reversibility test
// ---------------------------------------------------------------------------

/// Rejection rates of the time-reversibility test over a grid of true
/// asymmetry values and sample sizes.
#[derive(Clone, Debug)]
pub struct SizePowerSpec {
    pub hurst: (f64, f64),
    pub sigma2: (f64, f64),
    pub rho: f64,
    pub etas: Vec<f64>,
    pub ns: Vec<usize>,
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

pub fn run_size_power(spec: &SizePowerSpec) -> Result<ExperimentReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidParams("need at least one replication".into()));
    }
    let start = Instant::now();
    let mut report = ExperimentReport::new("size-power");
    report.push_config("hurst", format!("{},{}", spec.hurst.0, spec.hurst.1));
    report.push_config("rho", spec.rho);
    report.push_config("delta", spec.delta);
    report.push_config("replications", spec.replications);
    report.push_config("seed", spec.seed);
    report.push_config(
        "alphas",
        spec.alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );

    let mut columns = Vec::new();
    for a in &spec.alphas {
        columns.push(format!("reject_at_{a}"));
        columns.push(format!("se_at_{a}"));
    }
    let mut table = ReportTable {
        name: "rejection_rates".into(),
        columns,
        rows: Vec::new(),
    };
    let mut failures = 0usize;

    let mut cfg_idx = 0u64;
    for &n in &spec.ns {
        for &eta in &spec.etas {
            let params = ModelParams::bivariate(
                spec.hurst.0,
                spec.hurst.1,
                spec.sigma2.0,
                spec.sigma2.1,
                spec.rho,
                eta,
            )?;
            let sampler = PathSampler::new(params, n, spec.delta)?;
            let seed = replication_seed(spec.seed, cfg_idx);
            cfg_idx += 1;
            let paths = sampler.sample_many(seed, spec.replications);
            let outcomes: Vec<_> = paths
                .par_iter()
                .map(|path| -> Result<Vec<bool>> {
                    spec.alphas
                        .iter()
                        .map(|&a| Ok(test_time_reversibility(path, 0, 1, a)?.reject))
                        .collect()
                })
                .collect();
            let mut count = vec![0usize; spec.alphas.len()];
            let mut total = 0usize;
            for o in outcomes {
                match o {
                    Ok(flags) => {
                        total += 1;
                        for (c, f) in count.iter_mut().zip(flags) {
                            *c += f as usize;
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
            let mut values = Vec::new();
            for &c in &count {
                let p = c as f64 / total.max(1) as f64;
                values.push(p);
                values.push((p * (1.0 - p) / total.max(1) as f64).sqrt());
            }
            table.rows.push(ReportRow {
                label: format!("n={n},eta={eta}"),
                values,
            });
        }
    }

    report.tables.push(table);
    report.failures = failures;
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Forecast Monte Carlo
// ---------------------------------------------------------------------------

/// One forecasting scenario: a model, which components to forecast,
/// and which nested sub-models to compare.
#[derive(Clone, Debug)]
pub struct ForecastCase {
    pub label: String,
    pub params: ModelParams,
    /// Component indices to forecast.
    pub targets: Vec<usize>,
    /// Sub-model sizes: `1` conditions on the target alone, `k ≥ 2`
    /// on the first `k` components (which must include the target).
    pub variants: Vec<usize>,
}

/// Known-parameter forecast Monte Carlo: empirical RMSFE of the
/// conditional-mean forecast next to its theoretical value.
#[derive(Clone, Debug)]
pub struct ForecastMcSpec {
    pub cases: Vec<ForecastCase>,
    /// Conditioning observations per replication.
    pub t: usize,
    pub horizons: Vec<usize>,
    pub delta: f64,
    pub replications: usize,
    pub seed: u64,
}

fn variant_name(k: usize) -> String {
    match k {
        1 => "fBm".into(),
        2 => "bfBm".into(),
        k => format!("mfBm{k}"),
    }
}

/// Restricts a path to a column subset (same times).
fn select_columns(path: &SamplePath, cols: &[usize]) -> SamplePath {
    let mut m = Mat::zeros(path.n(), cols.len());
    for r in 0..path.n() {
        for (c, &col) in cols.iter().enumerate() {
            m.set(r, c, path.level(r, col));
        }
    }
    SamplePath::from_levels(path.delta(), m).expect("valid sub-path")
}

pub fn run_forecast_mc(spec: &ForecastMcSpec) -> Result<ExperimentReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidParams("need at least one replication".into()));
    }
    let hmax = *spec
        .horizons
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParams("need at least one horizon".into()))?;
    let start = Instant::now();
    let mut report = ExperimentReport::new("forecast-mc");
    report.push_config("t", spec.t);
    report.push_config("delta", spec.delta);
    report.push_config("replications", spec.replications);
    report.push_config("seed", spec.seed);
    report.push_config(
        "horizons",
        spec.horizons.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );

    let mut table = ReportTable {
        name: "rmsfe".into(),
        columns: ["rmsfe", "rmsfe_theory", "mc_se", "bias"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: Vec::new(),
    };

    for (case_idx, case) in spec.cases.iter().enumerate() {
        let d = case.params.d();
        let sampler = PathSampler::new(case.params.clone(), spec.t + hmax, spec.delta)?;
        let seed = replication_seed(spec.seed, case_idx as u64);
        let paths = sampler.sample_many(seed, spec.replications);

        for &target in &case.targets {
            for &k in &case.variants {
                if k != 1 && target >= k {
                    return Err(Error::InvalidParams(format!(
                        "variant of size {k} does not include target component {target}"
                    )));
                }
                let (sub_params, cols, target_pos) = if k == 1 {
                    (case.params.component(target)?, vec![target], 0)
                } else {
                    (case.params.head(k)?, (0..k).collect::<Vec<_>>(), target)
                };
                let engine = ForecastEngine::new(sub_params, spec.t, spec.delta)?;
                let weights: Vec<_> = spec
                    .horizons
                    .iter()
                    .map(|&h| engine.weights(target_pos, h))
                    .collect::<Result<_>>()?;

                let is_full = cols.len() == d;
                let subs: Vec<SamplePath> = if is_full {
                    Vec::new()
                } else {
                    paths.par_iter().map(|p| select_columns(p, &cols)).collect()
                };

                for (hi, &h) in spec.horizons.iter().enumerate() {
                    let w = &weights[hi];
                    let mut sq = Vec::with_capacity(spec.replications);
                    let mut bias = 0.0;
                    for (r, path) in paths.iter().enumerate() {
                        let sub = if is_full { path } else { &subs[r] };
                        let f = w.apply(sub)?;
                        let actual = path.level(spec.t + h - 1, target);
                        let err = f.value - actual;
                        sq.push(err * err);
                        bias += err;
                    }
                    let rf = spec.replications as f64;
                    let mse = sq.iter().sum::<f64>() / rf;
                    let rmsfe = mse.sqrt();
                    // Delta method: Var(√m̂) ≈ Var(m̂)/(4m).
                    let var_mse =
                        sq.iter().map(|v| (v - mse) * (v - mse)).sum::<f64>() / (rf - 1.0).max(1.0);
                    let se = (var_mse / rf).sqrt() / (2.0 * rmsfe.max(1e-300));
                    table.rows.push(ReportRow {
                        label: format!(
                            "{}:{}|i={}|h={h}",
                            case.label,
                            variant_name(k),
                            target + 1
                        ),
                        values: vec![rmsfe, w.msfe.sqrt(), se, bias / rf],
                    });
                }
            }
        }
    }

    report.tables.push(table);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Rolling empirical pipeline
// ---------------------------------------------------------------------------

/// Rolling-window out-of-sample comparison on a realized-volatility
/// panel: per window, parameters are re-estimated, each model variant
/// forecasts the first series at every horizon, and RMSFEs accumulate
/// on the reporting scale.
#[derive(Clone, Debug)]
pub struct RollingSpec {
    /// Rolling window length in observations.
    pub window: usize,
    pub horizons: Vec<usize>,
    /// Process dimensions to fit (1 = univariate; `k` uses the first
    /// `k` panel series).
    pub dims: Vec<usize>,
    /// Offset between consecutive window starts.
    pub stride: usize,
    /// Include the HAR baseline.
    pub har: bool,
    /// Panel sizes for the vector HAR baseline (e.g. `[2, 3]`).
    pub vhar: Vec<usize>,
    pub delta: f64,
    /// Subtract each window's first row before modeling (the window
    /// start becomes the time origin). Without anchoring, raw levels
    /// are treated as observations at `Δ, …, windowΔ`.
    pub anchor: bool,
    /// Add half the theoretical forecast variance before
    /// exponentiating (lognormal mean correction).
    pub lognormal_correction: bool,
    /// Fit HAR on log volatility instead of the raw scale.
    pub har_on_log: bool,
    /// Evaluation-row indices at which to split the RMSFE tables into
    /// sub-periods.
    pub breakpoints: Vec<usize>,
}

impl RollingSpec {
    /// Fits every dimension `1..=max_dim` with consecutive windows.
    pub fn new(window: usize, horizons: Vec<usize>, max_dim: usize, delta: f64) -> Self {
        RollingSpec {
            window,
            horizons,
            dims: (1..=max_dim).collect(),
            stride: 1,
            har: true,
            vhar: Vec::new(),
            delta,
            anchor: true,
            lognormal_correction: false,
            har_on_log: false,
            breakpoints: Vec::new(),
        }
    }
}

/// Forecasts produced by one model on one window, by horizon.
type WindowForecasts = Vec<Option<f64>>;

struct WindowResult {
    /// Per model: forecast per horizon (None on failure).
    forecasts: Vec<WindowForecasts>,
    /// Estimated Hurst exponents of the fitted components.
    hurst: Vec<f64>,
    failures: usize,
}

fn rolling_models(spec: &RollingSpec) -> Vec<String> {
    let mut names: Vec<String> = spec.dims.iter().map(|&k| variant_name(k)).collect();
    if spec.har {
        names.push("HAR".into());
    }
    for &j in &spec.vhar {
        names.push(format!("VHAR{j}"));
    }
    names
}

/// Runs the mfBm side of one window: anchored estimation, reversible
/// refit, conditional-mean forecast of series 0 at every horizon.
fn window_mfbm_forecasts(
    log_window: &Mat<f64>,
    spec: &RollingSpec,
    k: usize,
) -> Result<(WindowForecasts, Vec<f64>)> {
    let w = log_window.rows();
    let (offset, n) = if spec.anchor { (1, w - 1) } else { (0, w) };
    let mut levels = Mat::zeros(n, k);
    for r in 0..n {
        for c in 0..k {
            let base = if spec.anchor { log_window.get(0, c) } else { 0.0 };
            levels.set(r, c, log_window.get(r + offset, c) - base);
        }
    }
    let path = SamplePath::from_levels(spec.delta, levels)?;

    // Per-component estimates; boundary estimates are a refusal.
    let mut hurst = Vec::with_capacity(k);
    let mut sigma2 = Vec::with_capacity(k);
    for i in 0..k {
        let h = estimate_hurst(&path, i)?;
        if !(0.001..=0.999).contains(&h) {
            return Err(Error::Unidentified(format!(
                "window Hurst estimate {h} for series {i} is outside (0, 1)"
            )));
        }
        hurst.push(h);
        sigma2.push(estimate_sigma2(&path, i, h)?.max(1e-12));
    }
    let mut rho_raw = Mat::identity(k);
    for i in 0..k {
        for j in (i + 1)..k {
            // Plug-in correlations must respect the coherence bound of
            // the estimated Hurst pair or the fitted model does not
            // exist; stay 5% inside it to keep the fitted covariance
            // away from singularity.
            let cap = 0.95 * rho_max(hurst[i], hurst[j]).min(1.0);
            let r = estimate_rho(&path, i, j)?.clamp(-cap, cap);
            rho_raw.set(i, j, r);
            rho_raw.set(j, i, r);
        }
    }
    // Estimation noise can push the plug-in model toward (or past) the
    // admissibility boundary, where prediction weights explode and a
    // single window can wreck the error metric. Shrink all correlations
    // toward zero until the model factorizes, the weight vectors have
    // bounded l1 norm, and every forecast lands near the window's own
    // range; the diagonal end of the ladder always qualifies. A small
    // probe grid screens each rung first (weight norms barely depend on
    // the grid length) so the expensive full factorization runs once
    // per accepted scale, not once per rung.
    const MAX_WEIGHT_L1: f64 = 6.0;
    let n_probe = n.min(64);
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for r in 0..n {
        let v = path.levels().get(r, 0);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let margin = 1.0 + 0.5 * (hi - lo);
    let band = (lo - margin, hi + margin);
    let check_weights = |w: &[f64]| -> Result<()> {
        if w.iter().map(|x| x.abs()).sum::<f64>() > MAX_WEIGHT_L1 {
            return Err(Error::Numerical("unstable forecast weights".into()));
        }
        Ok(())
    };

    let mut scale = 1.0;
    let forecasts = loop {
        let mut rho = rho_raw.clone();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    rho.set(i, j, rho_raw.get(i, j) * scale);
                }
            }
        }
        let params = ModelParams::new(hurst.clone(), sigma2.clone(), rho, Mat::zeros(k, k))?;
        let attempt = (|| -> Result<Vec<f64>> {
            if k > 1 && n_probe < n {
                let probe = ForecastEngine::new(params.clone(), n_probe, spec.delta)?;
                for &h in &spec.horizons {
                    check_weights(&probe.weights(0, h)?.weights)?;
                }
            }
            let engine = ForecastEngine::new(params, n, spec.delta)?;
            let mut vals = Vec::with_capacity(spec.horizons.len());
            for &h in &spec.horizons {
                let w = engine.weights(0, h)?;
                check_weights(&w.weights)?;
                let f = w.apply(&path)?;
                if !f.value.is_finite() || f.value < band.0 || f.value > band.1 {
                    return Err(Error::Numerical(
                        "forecast outside the window's stability band".into(),
                    ));
                }
                vals.push(if spec.lognormal_correction {
                    f.value + 0.5 * f.msfe
                } else {
                    f.value
                });
            }
            Ok(vals)
        })();
        match attempt {
            Ok(v) => break v,
            Err(_) if scale > 0.1 => scale *= 0.8,
            Err(_) if scale > 0.0 => scale = 0.0,
            Err(e) => return Err(e),
        }
    };

    let anchor0 = if spec.anchor { log_window.get(0, 0) } else { 0.0 };
    let out = forecasts
        .into_iter()
        .map(|v| Some((v + anchor0).exp()))
        .collect();
    Ok((out, hurst))
}

fn window_result(rv: &Mat<f64>, s: usize, spec: &RollingSpec) -> WindowResult {
    let w = spec.window;
    let mut log_window = Mat::zeros(w, rv.cols());
    for r in 0..w {
        for c in 0..rv.cols() {
            log_window.set(r, c, rv.get(s + r, c).ln());
        }
    }
    let nh = spec.horizons.len();
    let max_dim = spec.dims.iter().copied().max().unwrap_or(1);
    let mut forecasts = Vec::new();
    let mut hurst = vec![f64::NAN; max_dim];
    let mut failures = 0usize;

    for &k in &spec.dims {
        match window_mfbm_forecasts(&log_window, spec, k) {
            Ok((f, h)) => {
                if k == max_dim {
                    hurst[..h.len()].copy_from_slice(&h);
                }
                forecasts.push(f);
            }
            Err(_) => {
                failures += 1;
                forecasts.push(vec![None; nh]);
            }
        }
    }

    if spec.har {
        let series: Vec<f64> = (0..w)
            .map(|r| {
                if spec.har_on_log {
                    log_window.get(r, 0)
                } else {
                    rv.get(s + r, 0)
                }
            })
            .collect();
        let mut f = Vec::with_capacity(nh);
        for &h in &spec.horizons {
            match har_fit_forecast(&series, h) {
                Ok(hf) => f.push(Some(if spec.har_on_log {
                    hf.forecast.exp()
                } else {
                    hf.forecast
                })),
                Err(_) => {
                    failures += 1;
                    f.push(None);
                }
            }
        }
        forecasts.push(f);
    }
    for &j in &spec.vhar {
        let mut panel = Mat::zeros(w, j);
        for r in 0..w {
            for c in 0..j {
                panel.set(
                    r,
                    c,
                    if spec.har_on_log {
                        log_window.get(r, c)
                    } else {
                        rv.get(s + r, c)
                    },
                );
            }
        }
        let mut f = Vec::with_capacity(nh);
        for &h in &spec.horizons {
            match vhar_fit_forecast(&panel, 0, h) {
                Ok(hf) => f.push(Some(if spec.har_on_log {
                    hf.forecast.exp()
                } else {
                    hf.forecast
                })),
                Err(_) => {
                    failures += 1;
                    f.push(None);
                }
            }
        }
        forecasts.push(f);
    }

    WindowResult {
        forecasts,
        hurst,
        failures,
    }
}

/// Runs the rolling comparison on a realized-volatility panel
/// (rows = dates in order, columns = series; the first series is the
/// forecast target). Values must be strictly positive.
pub fn run_rolling_empirical(spec: &RollingSpec, rv: &Mat<f64>) -> Result<ExperimentReport> {
    let n_rows = rv.rows();
    let hmax = *spec
        .horizons
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParams("need at least one horizon".into()))?;
    if spec.window < 100 {
        return Err(Error::InvalidParams(format!(
            "rolling window must be at least 100 observations, got {}",
            spec.window
        )));
    }
    if spec.dims.is_empty() || spec.stride == 0 {
        return Err(Error::InvalidParams(
            "need at least one model dimension and a positive stride".into(),
        ));
    }
    if spec.dims.iter().any(|&k| k == 0 || k > rv.cols()) {
        return Err(Error::InvalidParams(format!(
            "model dimensions {:?} out of range for a {}-column panel",
            spec.dims,
            rv.cols()
        )));
    }
    if spec.vhar.iter().any(|&j| j == 0 || j > rv.cols()) {
        return Err(Error::InvalidParams("vector HAR size out of range".into()));
    }
    if n_rows < spec.window + hmax + 1 {
        return Err(Error::InsufficientData(format!(
            "panel has {n_rows} rows; need at least {}",
            spec.window + hmax + 1
        )));
    }
    if rv.data().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Data(
            "realized volatilities must be strictly positive and finite".into(),
        ));
    }

    let start = Instant::now();
    let n_windows = n_rows - spec.window - hmax + 1;
    let starts: Vec<usize> = (0..n_windows).step_by(spec.stride).collect();
    let results: Vec<WindowResult> = starts
        .par_iter()
        .map(|&s| window_result(rv, s, spec))
        .collect();

    let models = rolling_models(spec);
    let nh = spec.horizons.len();

    // Period boundaries over evaluation rows (the forecast's own row).
    let mut bounds = vec![0usize];
    for &b in &spec.breakpoints {
        bounds.push(b);
    }
    bounds.push(n_rows);
    bounds.sort_unstable();
    bounds.dedup();

    let mut table = ReportTable {
        name: "rmsfe".into(),
        columns: {
            let mut c = Vec::new();
            for &h in &spec.horizons {
                c.push(format!("h={h}"));
            }
            c.push("windows".into());
            c
        },
        rows: Vec::new(),
    };

    for seg in 0..bounds.len() - 1 {
        let (lo, hi) = (bounds[seg], bounds[seg + 1]);
        for (mi, model) in models.iter().enumerate() {
            let mut values = Vec::with_capacity(nh + 1);
            let mut used = 0usize;
            for (hi_idx, &h) in spec.horizons.iter().enumerate() {
                let mut sq = 0.0;
                let mut count = 0usize;
                for (&s, res) in starts.iter().zip(&results) {
                    let eval_row = s + spec.window - 1 + h;
                    if eval_row < lo || eval_row >= hi {
                        continue;
                    }
                    if let Some(f) = res.forecasts[mi][hi_idx] {
                        let err = f - rv.get(eval_row, 0);
                        sq += err * err;
                        count += 1;
                    }
                }
                values.push(if count > 0 {
                    (sq / count as f64).sqrt()
                } else {
                    f64::NAN
                });
                used = used.max(count);
            }
            values.push(used as f64);
            let label = if bounds.len() > 2 {
                format!("period{}:{model}", seg + 1)
            } else {
                model.clone()
            };
            table.rows.push(ReportRow { label, values });
        }
    }

    // Paired MSFE differences against the univariate baseline, with
    // Monte Carlo standard errors over windows (all periods pooled).
    // Pairing matters: forecast errors from the same window are highly
    // correlated, so the difference is far better determined than the
    // two RMSFEs separately.
    let mut diff_table = ReportTable {
        name: "msfe_diff".into(),
        columns: spec.horizons.iter().map(|h| format!("h={h}")).collect(),
        rows: Vec::new(),
    };
    let mut diff_se_table = ReportTable {
        name: "msfe_diff_se".into(),
        columns: spec.horizons.iter().map(|h| format!("h={h}")).collect(),
        rows: Vec::new(),
    };
    for (mi, model) in models.iter().enumerate().skip(1) {
        let mut means = Vec::with_capacity(nh);
        let mut ses = Vec::with_capacity(nh);
        for (hi_idx, &h) in spec.horizons.iter().enumerate() {
            let mut diffs = Vec::new();
            for (&s, res) in starts.iter().zip(&results) {
                let actual = rv.get(s + spec.window - 1 + h, 0);
                if let (Some(fm), Some(f0)) =
                    (res.forecasts[mi][hi_idx], res.forecasts[0][hi_idx])
                {
                    let (em, e0) = (fm - actual, f0 - actual);
                    diffs.push(em * em - e0 * e0);
                }
            }
            if diffs.is_empty() {
                means.push(f64::NAN);
                ses.push(f64::NAN);
                continue;
            }
            let w = diffs.len() as f64;
            let mean = diffs.iter().sum::<f64>() / w;
            let var =
                diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (w - 1.0).max(1.0);
            means.push(mean);
            ses.push((var / w).sqrt());
        }
        diff_table.rows.push(ReportRow {
            label: model.clone(),
            values: means,
        });
        diff_se_table.rows.push(ReportRow {
            label: model.clone(),
            values: ses,
        });
    }

    let max_dim = spec.dims.iter().copied().max().unwrap_or(1);
    let mut hurst_table = ReportTable {
        name: "rolling_hurst".into(),
        columns: (1..=max_dim).map(|i| format!("H{i}")).collect(),
        rows: Vec::new(),
    };
    for (&s, res) in starts.iter().zip(&results) {
        hurst_table.rows.push(ReportRow {
            label: format!("window_end={}", s + spec.window - 1),
            values: res.hurst.clone(),
        });
    }

    let mut report = ExperimentReport::new("rolling-empirical");
    report.push_config("window", spec.window);
    report.push_config(
        "dims",
        spec.dims.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    report.push_config("stride", spec.stride);
    report.push_config("delta", spec.delta);
    report.push_config("anchor", spec.anchor);
    report.push_config("har_on_log", spec.har_on_log);
    report.push_config("lognormal_correction", spec.lognormal_correction);
    report.push_config(
        "horizons",
        spec.horizons.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    report.failures = results.iter().map(|r| r.failures).sum();
    report.tables.push(table);
    report.tables.push(diff_table);
    report.tables.push(diff_se_table);
    report.tables.push(hurst_table);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Simulates a synthetic realized-volatility panel from a known model:
/// log RV follows the process, exponentiated around `base_level`.
pub fn synthetic_rv_panel(
    params: &ModelParams,
    days: usize,
    delta: f64,
    base_level: f64,
    seed: u64,
) -> Result<Mat<f64>> {
    let sampler = PathSampler::new(params.clone(), days, delta)?;
    let path = sampler.sample_replication(seed, 0);
    let mut rv = Mat::zeros(days, params.d());
    for r in 0..days {
        for c in 0..params.d() {
            rv.set(r, c, (base_level + path.level(r, c)).exp());
        }
    }
    Ok(rv)
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// A runnable experiment of any kind.
#[derive(Clone, Debug)]
pub enum Experiment {
    EstimatorMc(EstimatorMcSpec),
    Comparison(ComparisonSpec),
    SizePower(SizePowerSpec),
    ForecastMc(ForecastMcSpec),
}

impl Experiment {
    pub fn run(&self) -> Result<ExperimentReport> {
        match self {
            Experiment::EstimatorMc(s) => run_estimator_mc(s),
            Experiment::Comparison(s) => run_estimator_comparison(s),
            Experiment::SizePower(s) => run_size_power(s),
            Experiment::ForecastMc(s) => run_forecast_mc(s),
        }
    }

    pub fn set_replications(&mut self, reps: usize) {
        match self {
            Experiment::EstimatorMc(s) => s.replications = reps,
            Experiment::Comparison(s) => s.replications = reps,
            Experiment::SizePower(s) => s.replications = reps,
            Experiment::ForecastMc(s) => s.replications = reps,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::EstimatorMc(s) => s.seed = seed,
            Experiment::Comparison(s) => s.seed = seed,
            Experiment::SizePower(s) => s.seed = seed,
            Experiment::ForecastMc(s) => s.seed = seed,
        }
    }

    /// Named presets mirroring the published simulation studies at
    /// desk-scale replication counts.
    pub fn preset(name: &str) -> Result<Experiment> {
        let biv = |rho: f64, eta: f64| ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, rho, eta);
        let cells = vec![(500, 1.0 / 52.0), (1000, 1.0 / 52.0), (500, 1.0 / 250.0), (1000, 1.0 / 250.0)];
        match name {
            "table1" => Ok(Experiment::EstimatorMc(EstimatorMcSpec {
                params: biv(0.0, 0.0)?,
                cells,
                replications: 1000,
                seed: 20240901,
            })),
            "table2" => Ok(Experiment::EstimatorMc(EstimatorMcSpec {
                params: biv(0.4, 0.0)?,
                cells,
                replications: 1000,
                seed: 20240902,
            })),
            "table3" => Ok(Experiment::Comparison(ComparisonSpec {
                configs: vec![
                    ("rho=0,eta=0".into(), biv(0.0, 0.0)?),
                    ("rho=0,eta=0.5".into(), biv(0.0, 0.5)?),
                    ("rho=0.4,eta=0".into(), biv(0.4, 0.0)?),
                    ("rho=0.4,eta=0.5".into(), biv(0.4, 0.5)?),
                ],
                n: 1000,
                delta: 1.0 / 250.0,
                replications: 1000,
                seed: 20240903,
                filter: Filter::second_difference(),
            })),
            "sizepower" => Ok(Experiment::SizePower(SizePowerSpec {
                hurst: (0.1, 0.4),
                sigma2: (1.0, 1.0),
                rho: 0.4,
                etas: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65],
                ns: vec![500, 1000],
                delta: 1.0 / 250.0,
                alphas: vec![0.01, 0.05],
                replications: 2000,
                seed: 20240904,
            })),
            "table4" => {
                let mut cases = Vec::new();
                for rho in [0.0, 0.4, 0.8] {
                    cases.push(ForecastCase {
                        label: format!("corr={rho}"),
                        params: biv(rho, 0.0)?,
                        targets: vec![0, 1],
                        variants: vec![1, 2],
                    });
                }
                Ok(Experiment::ForecastMc(ForecastMcSpec {
                    cases,
                    t: 500,
                    horizons: vec![1, 2, 3, 4, 5],
                    delta: 1.0 / 250.0,
                    replications: 2000,
                    seed: 20240905,
                }))
            }
            "table5" => {
                let mut cases = Vec::new();
                for h2 in [0.1, 0.2, 0.4] {
                    cases.push(ForecastCase {
                        label: format!("H2={h2}"),
                        params: ModelParams::bivariate(0.1, h2, 1.0, 1.0, 0.4, 0.0)?,
                        targets: vec![0, 1],
                        variants: vec![1, 2],
                    });
                }
                Ok(Experiment::ForecastMc(ForecastMcSpec {
                    cases,
                    t: 500,
                    horizons: vec![1, 2, 3, 4, 5],
                    delta: 1.0 / 250.0,
                    replications: 2000,
                    seed: 20240906,
                }))
            }
            "table6" => {
                // Star designs: extra components correlate with the
                // target only.
                let star = |d: usize| -> Result<ModelParams> {
                    let mut hurst = vec![0.4; d];
                    hurst[0] = 0.1;
                    let mut rho = Mat::identity(d);
                    for j in 1..d {
                        rho.set(0, j, 0.4);
                        rho.set(j, 0, 0.4);
                    }
                    ModelParams::new(hurst, vec![1.0; d], rho, Mat::zeros(d, d))
                };
                Ok(Experiment::ForecastMc(ForecastMcSpec {
                    cases: vec![
                        ForecastCase {
                            label: "Sigma1".into(),
                            params: star(3)?,
                            targets: vec![0],
                            variants: vec![1, 2, 3],
                        },
                        ForecastCase {
                            label: "Sigma2".into(),
                            params: star(4)?,
                            targets: vec![0],
                            variants: vec![1, 2, 3, 4],
                        },
                    ],
                    t: 500,
                    horizons: vec![1, 2, 3, 4, 5],
                    delta: 1.0 / 250.0,
                    replications: 2000,
                    seed: 20240907,
                }))
            }
            other => Err(Error::InvalidParams(format!(
                "unknown preset '{other}' (expected table1..table6 or sizepower)"
            ))),
        }
    }
}
