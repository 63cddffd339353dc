//! Command-line interface to the mfBm library: simulation, estimation,
//! reversibility testing, forecasting, Monte Carlo experiment presets,
//! the rolling empirical pipeline, and HAR baselines. Every output is
//! CSV (or an aligned text rendering on stdout) with `# key=value`
//! provenance headers; exit codes are 0 on success, 2 on validation or
//! data errors, 3 on numerical failure.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfbm::experiments::{Experiment, ExperimentReport, ReportRow, ReportTable, RollingSpec};
use mfbm::{
    estimate_all, har_fit_forecast, load_panel_path, model_from_config, msfe_exchangeable,
    msfe_univariate_one_obs, read_path_csv, render_report, run_rolling_empirical,
    test_time_reversibility, vhar_fit_forecast, write_path_csv, write_report_csv, ConfigDoc,
    Error, ForecastEngine, Mat, ModelParams, PathSampler, Result, SamplePath,
};

#[derive(Parser)]
#[command(
    name = "mfbm",
    version,
    about = "Multivariate fractional Brownian motion: simulate, estimate, test, forecast",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate an mfBm path from a model config and write it as CSV
    Simulate(SimulateArgs),
    /// Estimate Hurst exponents, scales, correlations, and asymmetries
    Estimate(EstimateArgs),
    /// Test each pair of series for time reversibility (η = 0)
    TestReversibility(TestArgs),
    /// Conditional-mean forecasts and forecast-theory plot data
    Forecast(ForecastArgs),
    /// Run a Monte Carlo experiment preset
    Mc(McArgs),
    /// Rolling out-of-sample model comparison on a volatility panel
    Empirical(EmpiricalArgs),
    /// HAR and vector-HAR baseline forecasts
    Har(HarArgs),
}

/// Parses a step size given either as a decimal or a fraction `a/b`.
fn parse_delta(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let n: f64 = num.trim().parse().map_err(|_| format!("bad fraction {s}"))?;
            let d: f64 = den.trim().parse().map_err(|_| format!("bad fraction {s}"))?;
            n / d
        }
        None => s.trim().parse().map_err(|_| format!("bad number {s}"))?,
    };
    if !(v > 0.0) || !v.is_finite() {
        return Err(format!("step size must be positive and finite, got {s}"));
    }
    Ok(v)
}

#[derive(Args)]
struct SimulateArgs {
    /// Model config file (key = value lines plus matrix blocks)
    #[arg(long)]
    config: PathBuf,
    /// Number of observations on the grid Δ, 2Δ, …, nΔ
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Grid step (decimal or fraction, e.g. 1/252)
    #[arg(long, value_parser = parse_delta, default_value = "1/252")]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV: a dated panel (`date,TICK1,…`) or, with --path-csv, a
    /// simulated path (`time,B1,…`)
    #[arg(long)]
    input: PathBuf,
    /// Take natural logs of the panel values before modeling
    #[arg(long)]
    log: bool,
    /// Treat the input as already log-transformed
    #[arg(long, conflicts_with = "log")]
    input_is_log: bool,
    /// Input is a `time,B1,…` path CSV rather than a dated panel
    #[arg(long)]
    path_csv: bool,
    /// Significance level for the reversibility tests
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Grid step for dated panels (decimal or fraction)
    #[arg(long, value_parser = parse_delta)]
    delta: Option<f64>,
    /// Use panel rows as-is instead of anchoring at the first row
    #[arg(long)]
    no_anchor: bool,
    /// Also write the report as CSV to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    log: bool,
    #[arg(long, conflicts_with = "log")]
    input_is_log: bool,
    #[arg(long)]
    path_csv: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Test only this 1-based pair, e.g. --pair 1,3
    #[arg(long, value_delimiter = ',')]
    pair: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_delta)]
    delta: Option<f64>,
    #[arg(long)]
    no_anchor: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ForecastPlot {
    /// Point forecasts (needs --input) plus theoretical error
    Forecasts,
    /// Prediction-weight curves for the first requested horizon
    Weights,
    /// Theoretical MSFE and RMSFE against the forecast horizon
    Msfe,
    /// Relative MSFE of the exchangeable d-variate model against d
    Dimension,
}

#[derive(Args)]
struct ForecastArgs {
    /// Model config file (not needed for --plot dimension)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conditioning history as a `time,B1,…` path CSV
    #[arg(long)]
    input: Option<PathBuf>,
    /// 1-based component to forecast
    #[arg(long, default_value_t = 1)]
    target: usize,
    /// Forecast horizons in grid steps
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
    horizons: Vec<usize>,
    /// Conditioning length when no --input is given
    #[arg(long, default_value_t = 500)]
    t: usize,
    #[arg(long, value_parser = parse_delta, default_value = "1/252")]
    delta: f64,
    #[arg(long, value_enum, default_value_t = ForecastPlot::Forecasts)]
    plot: ForecastPlot,
    /// Common correlation for --plot dimension
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    /// Target Hurst exponent for --plot dimension
    #[arg(long, default_value_t = 0.4)]
    hurst_target: f64,
    /// Hurst exponent of the other components for --plot dimension
    #[arg(long, default_value_t = 0.1)]
    hurst_other: f64,
    /// Dimensions for --plot dimension
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000])]
    dims: Vec<usize>,
    /// Observation times (in time units) for --plot dimension
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 10.0])]
    times: Vec<f64>,
    /// Forecast lead (in time units) for --plot dimension
    #[arg(long, default_value_t = 1.0)]
    lead: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Experiment preset: table1…table6 or sizepower
    #[arg(long)]
    preset: String,
    /// Override the preset's replication count
    #[arg(long)]
    reps: Option<usize>,
    /// Override the preset's base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report as CSV to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmpiricalArgs {
    /// Dated panel of strictly positive realized volatilities
    #[arg(long)]
    input: PathBuf,
    /// Rolling window length in rows
    #[arg(long, default_value_t = 500)]
    window: usize,
    /// Forecast horizons in rows
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
    horizons: Vec<usize>,
    /// Model dimensions to fit (default 1..=panel width)
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Offset between consecutive window starts
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Skip the HAR baseline
    #[arg(long)]
    no_har: bool,
    /// Vector-HAR panel sizes, e.g. --vhar 2,3
    #[arg(long, value_delimiter = ',')]
    vhar: Vec<usize>,
    #[arg(long, value_parser = parse_delta)]
    delta: Option<f64>,
    #[arg(long)]
    no_anchor: bool,
    /// Add half the forecast variance before exponentiating
    #[arg(long)]
    lognormal_correction: bool,
    /// Fit HAR on log volatility instead of the raw scale
    #[arg(long)]
    har_on_log: bool,
    /// Row indices splitting the evaluation period into segments
    #[arg(long, value_delimiter = ',')]
    breakpoints: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HarArgs {
    /// Dated panel of realized volatilities
    #[arg(long)]
    input: PathBuf,
    /// 1-based target column
    #[arg(long, default_value_t = 1)]
    target: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
    horizons: Vec<usize>,
    /// Also fit a vector HAR on the first k columns
    #[arg(long)]
    vhar: Option<usize>,
    /// Fit on log volatility
    #[arg(long)]
    log: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Estimate(a) => estimate(a),
        Cmd::TestReversibility(a) => test_reversibility(a),
        Cmd::Forecast(a) => forecast(a),
        Cmd::Mc(a) => mc(a),
        Cmd::Empirical(a) => empirical(a),
        Cmd::Har(a) => har(a),
    }
}

fn read_config(path: &Path) -> Result<ModelParams> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    model_from_config(&ConfigDoc::parse(&text)?)
}

fn out_writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Prints the aligned rendering to stdout and, when requested, writes
/// the same report as CSV.
fn emit_report(report: &ExperimentReport, out: &Option<PathBuf>) -> Result<()> {
    print!("{}", render_report(report));
    if let Some(p) = out {
        write_report_csv(report, BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let params = read_config(&a.config)?;
    let sampler = PathSampler::new(params, a.n, a.delta)?;
    let path = sampler.sample_replication(a.seed, 0);
    let config = vec![
        ("config".to_string(), a.config.display().to_string()),
        ("n".to_string(), a.n.to_string()),
        ("delta".to_string(), format!("{}", a.delta)),
        ("seed".to_string(), a.seed.to_string()),
    ];
    write_path_csv(&path, &config, out_writer(&a.out)?)
}

/// Loads the conditioning data for estimation subcommands: either a
/// `time,B1,…` path CSV or a dated panel taken to the log scale.
fn load_input(
    input: &Path,
    path_csv: bool,
    log: bool,
    input_is_log: bool,
    delta: Option<f64>,
    no_anchor: bool,
) -> Result<(SamplePath, Vec<String>)> {
    if path_csv {
        let path = read_path_csv(File::open(input)?)?;
        let names = (1..=path.d()).map(|i| format!("B{i}")).collect();
        return Ok((path, names));
    }
    let mut panel = load_panel_path(input, log)?;
    if input_is_log {
        panel.log_scale = true;
    }
    if let Some(d) = delta {
        panel.delta = d;
    }
    let names = panel.tickers.clone();
    Ok((panel.to_path(!no_anchor)?, names))
}

fn pair_label(names: &[String], i: usize, j: usize) -> String {
    format!("{}:{}", names[i], names[j])
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let (path, names) = load_input(
        &a.input,
        a.path_csv,
        a.log,
        a.input_is_log,
        a.delta,
        a.no_anchor,
    )?;
    let est = estimate_all(&path)?;
    let d = path.d();

    let mut report = ExperimentReport::new("estimate");
    report.push_config("input", a.input.display().to_string());
    report.push_config("n", est.n);
    report.push_config("delta", est.delta);
    report.push_config("alpha", a.alpha);

    let mut components = ReportTable {
        name: "components".into(),
        columns: ["hurst", "hurst_se", "sigma2", "sigma2_se"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for (name, c) in names.iter().zip(&est.components) {
        components.rows.push(ReportRow {
            label: name.clone(),
            values: vec![c.hurst, opt(c.hurst_se), c.sigma2, opt(c.sigma2_se)],
        });
    }
    report.tables.push(components);

    let mut corr = ReportTable {
        name: "correlations".into(),
        columns: names.clone(),
        rows: names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut values = vec![0.0; d];
                values[i] = 1.0;
                ReportRow {
                    label: name.clone(),
                    values,
                }
            })
            .collect(),
    };
    for p in &est.pairs {
        corr.rows[p.i].values[p.j] = p.rho;
        corr.rows[p.j].values[p.i] = p.rho;
    }
    report.tables.push(corr);

    if d > 1 {
        let mut pairs = ReportTable {
            name: "pairs".into(),
            columns: ["rho", "rho_se", "eta", "eta_se"].map(String::from).to_vec(),
            rows: Vec::new(),
        };
        for p in &est.pairs {
            pairs.rows.push(ReportRow {
                label: pair_label(&names, p.i, p.j),
                values: vec![p.rho, opt(p.rho_se), opt(p.eta), opt(p.eta_se)],
            });
        }
        report.tables.push(pairs);
        report.tables.push(reversibility_table(&path, &names, a.alpha, None)?);
    }
    emit_report(&report, &a.out)
}

fn reversibility_table(
    path: &SamplePath,
    names: &[String],
    alpha: f64,
    only: Option<(usize, usize)>,
) -> Result<ReportTable> {
    let mut table = ReportTable {
        name: "reversibility".into(),
        columns: ["eta", "stat", "p_value", "critical", "reject"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let d = path.d();
    for i in 0..d {
        for j in (i + 1)..d {
            if let Some((pi, pj)) = only {
                if (i, j) != (pi, pj) {
                    continue;
                }
            }
            let t = test_time_reversibility(path, i, j, alpha)?;
            table.rows.push(ReportRow {
                label: pair_label(names, i, j),
                values: vec![t.eta, t.stat, t.p_value, t.critical, f64::from(t.reject)],
            });
        }
    }
    Ok(table)
}

fn test_reversibility(a: TestArgs) -> Result<()> {
    let (path, names) = load_input(
        &a.input,
        a.path_csv,
        a.log,
        a.input_is_log,
        a.delta,
        a.no_anchor,
    )?;
    let d = path.d();
    if d < 2 {
        return Err(Error::InvalidParams(
            "reversibility tests need at least two series".into(),
        ));
    }
    let only = match &a.pair {
        Some(p) => {
            if p.len() != 2 {
                return Err(Error::InvalidParams(
                    "--pair expects exactly two comma-separated indices".into(),
                ));
            }
            let (mut i, mut j) = (p[0], p[1]);
            if i == 0 || j == 0 || i > d || j > d || i == j {
                return Err(Error::InvalidParams(format!(
                    "--pair expects two distinct 1-based indices in 1..={d}"
                )));
            }
            if i > j {
                std::mem::swap(&mut i, &mut j);
            }
            Some((i - 1, j - 1))
        }
        None => None,
    };
    let mut report = ExperimentReport::new("test-reversibility");
    report.push_config("input", a.input.display().to_string());
    report.push_config("n", path.n());
    report.push_config("delta", path.delta());
    report.push_config("alpha", a.alpha);
    report.tables.push(reversibility_table(&path, &names, a.alpha, only)?);
    emit_report(&report, &a.out)
}

fn forecast(a: ForecastArgs) -> Result<()> {
    if a.horizons.is_empty() {
        return Err(Error::InvalidParams("need at least one horizon".into()));
    }
    if a.plot == ForecastPlot::Dimension {
        return forecast_dimension(&a);
    }
    let config_path = a.config.as_ref().ok_or_else(|| {
        Error::InvalidParams("this forecast mode needs a model config (--config)".into())
    })?;
    let params = read_config(config_path)?;
    let d = params.d();
    if a.target == 0 || a.target > d {
        return Err(Error::InvalidParams(format!(
            "--target expects a 1-based index in 1..={d}"
        )));
    }
    let target = a.target - 1;

    let history = match &a.input {
        Some(p) => {
            let path = read_path_csv(File::open(p)?)?;
            if path.d() != d {
                return Err(Error::InvalidParams(format!(
                    "model has {d} components but the input path has {}",
                    path.d()
                )));
            }
            Some(path)
        }
        None => None,
    };
    let (t, delta) = match &history {
        Some(p) => (p.n(), p.delta()),
        None => (a.t, a.delta),
    };
    let engine = ForecastEngine::new(params, t, delta)?;

    let mut report = ExperimentReport::new("forecast");
    if let Some(p) = &a.config {
        report.push_config("config", p.display().to_string());
    }
    if let Some(p) = &a.input {
        report.push_config("input", p.display().to_string());
    }
    report.push_config("target", a.target);
    report.push_config("t", t);
    report.push_config("delta", delta);

    match a.plot {
        ForecastPlot::Forecasts | ForecastPlot::Msfe => {
            let mut columns = vec!["msfe".to_string(), "rmsfe".to_string()];
            let with_values = a.plot == ForecastPlot::Forecasts && history.is_some();
            if with_values {
                columns.insert(0, "forecast".to_string());
            }
            let mut table = ReportTable {
                name: "forecasts".into(),
                columns,
                rows: Vec::new(),
            };
            for &h in &a.horizons {
                let w = engine.weights(target, h)?;
                let mut values = vec![w.msfe, w.msfe.sqrt()];
                if with_values {
                    let f = w.apply(history.as_ref().unwrap())?;
                    values.insert(0, f.value);
                }
                table.rows.push(ReportRow {
                    label: format!("h={h}"),
                    values,
                });
            }
            report.tables.push(table);
        }
        ForecastPlot::Weights => {
            let h = a.horizons[0];
            let w = engine.weights(target, h)?;
            report.push_config("horizon", h);
            let mut table = ReportTable {
                name: "weights".into(),
                columns: (1..=d).map(|i| format!("B{i}")).collect(),
                rows: Vec::new(),
            };
            for k in 0..t {
                table.rows.push(ReportRow {
                    label: format!("time={}", (k + 1) as f64 * delta),
                    values: w.weights[k * d..(k + 1) * d].to_vec(),
                });
            }
            report.tables.push(table);
        }
        ForecastPlot::Dimension => unreachable!(),
    }
    emit_report(&report, &a.out)
}

/// Relative MSFE of the exchangeable d-variate predictor against the
/// univariate one, as a curve in d for each requested observation time.
fn forecast_dimension(a: &ForecastArgs) -> Result<()> {
    let mut report = ExperimentReport::new("forecast-dimension");
    report.push_config("rho", a.rho);
    report.push_config("hurst_target", a.hurst_target);
    report.push_config("hurst_other", a.hurst_other);
    report.push_config("lead", a.lead);
    let mut table = ReportTable {
        name: "relative_msfe".into(),
        columns: a.times.iter().map(|t| format!("t={t}")).collect(),
        rows: Vec::new(),
    };
    for &d in &a.dims {
        let mut values = Vec::with_capacity(a.times.len());
        for &t in &a.times {
            let multi = msfe_exchangeable(d, a.rho, a.hurst_target, a.hurst_other, t, a.lead)?;
            let uni = msfe_univariate_one_obs(a.hurst_target, 1.0, t, a.lead);
            values.push(multi / uni);
        }
        table.rows.push(ReportRow {
            label: format!("d={d}"),
            values,
        });
    }
    report.tables.push(table);
    emit_report(&report, &a.out)
}

fn mc(a: McArgs) -> Result<()> {
    let mut exp = Experiment::preset(&a.preset)?;
    if let Some(r) = a.reps {
        exp.set_replications(r);
    }
    if let Some(s) = a.seed {
        exp.set_seed(s);
    }
    let report = exp.run()?;
    emit_report(&report, &a.out)
}

fn empirical(a: EmpiricalArgs) -> Result<()> {
    let mut panel = load_panel_path(&a.input, false)?;
    if let Some(d) = a.delta {
        panel.delta = d;
    }
    let width = panel.tickers.len();
    let mut spec = RollingSpec::new(a.window, a.horizons.clone(), width, panel.delta);
    if let Some(dims) = &a.dims {
        spec.dims = dims.clone();
    }
    spec.stride = a.stride;
    spec.har = !a.no_har;
    spec.vhar = a.vhar.clone();
    spec.anchor = !a.no_anchor;
    spec.lognormal_correction = a.lognormal_correction;
    spec.har_on_log = a.har_on_log;
    spec.breakpoints = a.breakpoints.clone();
    let mut report = run_rolling_empirical(&spec, &panel.values)?;
    report.push_config("input", a.input.display().to_string());
    report.push_config("target", panel.tickers[0].clone());
    emit_report(&report, &a.out)
}

fn har(a: HarArgs) -> Result<()> {
    let panel = load_panel_path(&a.input, a.log)?;
    let width = panel.tickers.len();
    if a.target == 0 || a.target > width {
        return Err(Error::InvalidParams(format!(
            "--target expects a 1-based index in 1..={width}"
        )));
    }
    if a.horizons.is_empty() {
        return Err(Error::InvalidParams("need at least one horizon".into()));
    }
    let target = a.target - 1;
    let series: Vec<f64> = (0..panel.n()).map(|r| panel.values.get(r, target)).collect();

    let mut report = ExperimentReport::new("har");
    report.push_config("input", a.input.display().to_string());
    report.push_config("target", panel.tickers[target].clone());
    report.push_config("n", panel.n());
    report.push_config("log", a.log);

    let mut forecasts = ReportTable {
        name: "forecasts".into(),
        columns: a.horizons.iter().map(|h| format!("h={h}")).collect(),
        rows: Vec::new(),
    };
    let mut coef = ReportTable {
        name: "har_coefficients".into(),
        columns: ["intercept", "daily", "weekly", "monthly"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let mut har_values = Vec::with_capacity(a.horizons.len());
    for &h in &a.horizons {
        let f = har_fit_forecast(&series, h)?;
        har_values.push(f.forecast);
        coef.rows.push(ReportRow {
            label: format!("h={h}"),
            values: f.coefficients,
        });
    }
    forecasts.rows.push(ReportRow {
        label: "HAR".into(),
        values: har_values,
    });

    if let Some(k) = a.vhar {
        if k == 0 || k > width || target >= k {
            return Err(Error::InvalidParams(format!(
                "--vhar expects a panel size in {}..={width} covering the target",
                target + 1
            )));
        }
        let mut sub = Mat::zeros(panel.n(), k);
        for r in 0..panel.n() {
            for c in 0..k {
                sub.set(r, c, panel.values.get(r, c));
            }
        }
        let mut values = Vec::with_capacity(a.horizons.len());
        for &h in &a.horizons {
            values.push(vhar_fit_forecast(&sub, target, h)?.forecast);
        }
        forecasts.rows.push(ReportRow {
            label: format!("VHAR{k}"),
            values,
        });
    }
    report.tables.push(forecasts);
    report.tables.push(coef);
    emit_report(&report, &a.out)
}
