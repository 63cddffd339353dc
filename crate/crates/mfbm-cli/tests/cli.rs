//! End-to-end tests of the `mfbm` binary: argument handling, exit
//! codes, and bit-exact agreement between the file-based pipeline and
//! the in-memory library calls.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mfbm::io::TRADING_DELTA;
use mfbm::{
    estimate_all, model_to_config, msfe_exchangeable, msfe_univariate_one_obs, read_path_csv,
    synthetic_rv_panel, ModelParams, PathSampler,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfbm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Splits one CSV line, honoring double-quoted fields.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if in_quotes && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Extracts the value at (row_label, column) from a `# table=<name>`
/// block of a report CSV.
fn csv_value(text: &str, table: &str, row: &str, column: &str) -> f64 {
    let mut in_table = false;
    let mut col_idx = None;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("# table=") {
            in_table = name == table;
            col_idx = None;
            continue;
        }
        if !in_table || line.starts_with('#') {
            continue;
        }
        let cells = split_csv_line(line);
        match col_idx {
            None => {
                col_idx = Some(
                    cells
                        .iter()
                        .position(|c| c == column)
                        .unwrap_or_else(|| panic!("column {column} in table {table}")),
                );
            }
            Some(idx) => {
                if cells[0] == row {
                    return cells[idx].parse().expect("numeric cell");
                }
            }
        }
    }
    panic!("row {row} not found in table {table}");
}

fn write_panel_csv(path: &Path, values: &mfbm::Mat<f64>) {
    let mut text = String::from("date");
    for c in 1..=values.cols() {
        text.push_str(&format!(",S{c}"));
    }
    text.push('\n');
    for r in 0..values.rows() {
        // Fake but strictly increasing ISO dates.
        let (year, month, day) = (2015 + r / 336, 1 + (r % 336) / 28, 1 + r % 28);
        text.push_str(&format!("{year:04}-{month:02}-{day:02}"));
        for c in 0..values.cols() {
            text.push_str(&format!(",{}", values.get(r, c)));
        }
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("Usage"), "expected usage text, got: {err}");
}

#[test]
fn unknown_flags_exit_2_with_usage() {
    let out = run(&["simulate", "--does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage") || stderr(&out).contains("unexpected"));

    let out = run(&["mc", "--preset", "table99"]);
    assert_eq!(out.status.code(), Some(2), "unknown preset is a validation error");
}

#[test]
fn simulate_then_estimate_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("model.cfg");
    let path_csv = dir.path().join("path.csv");
    let report_csv = dir.path().join("report.csv");

    let params = ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, 0.4, 0.2).unwrap();
    fs::write(&config, model_to_config(&params).serialize()).unwrap();

    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--n",
        "300",
        "--delta",
        "1/250",
        "--seed",
        "9",
        "--out",
        path_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&path_csv).unwrap();
    assert!(text.starts_with("# config="), "provenance header first: {text}");

    // The file round trip must reproduce the in-memory path exactly.
    let in_memory = PathSampler::new(params, 300, 1.0 / 250.0)
        .unwrap()
        .sample_replication(9, 0);
    let from_file = read_path_csv(fs::File::open(&path_csv).unwrap()).unwrap();
    assert_eq!(from_file.n(), in_memory.n());
    assert_eq!(from_file.delta().to_bits(), in_memory.delta().to_bits());
    for k in 0..in_memory.n() {
        for i in 0..2 {
            assert_eq!(
                from_file.level(k, i).to_bits(),
                in_memory.level(k, i).to_bits(),
                "level ({k},{i}) drifted through the CSV round trip"
            );
        }
    }

    // And the CLI's estimate report must carry the exact in-memory
    // estimates through its own serialization.
    let out = run(&[
        "estimate",
        "--input",
        path_csv.to_str().unwrap(),
        "--path-csv",
        "--out",
        report_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let est = estimate_all(&in_memory).unwrap();
    let report = fs::read_to_string(&report_csv).unwrap();
    let h1 = csv_value(&report, "components", "B1", "hurst");
    let rho = csv_value(&report, "pairs", "B1:B2", "rho");
    assert_eq!(h1.to_bits(), est.components[0].hurst.to_bits());
    assert_eq!(rho.to_bits(), est.pairs[0].rho.to_bits());
}

#[test]
fn mc_preset_emits_a_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("table1.csv");
    let out = run(&[
        "mc",
        "--preset",
        "table1",
        "--reps",
        "2",
        "--seed",
        "42",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("estimates"), "rendering on stdout");

    let text = fs::read_to_string(&out_csv).unwrap();
    assert!(text.starts_with("# kind=estimator-mc"));
    assert!(text.contains("# seed=42"));
    assert!(text.contains("# table=estimates"));
    // Bias %/std columns for every cell × parameter row.
    let bias = csv_value(&text, "estimates", "n=500,delta=0.004:H1", "bias");
    assert!(bias.is_finite());
}

#[test]
fn estimate_reads_a_dated_panel_with_log_and_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let panel_csv = dir.path().join("panel.csv");
    let params = ModelParams::bivariate(0.15, 0.45, 1.0, 1.0, 0.3, 0.0).unwrap();
    let rv = synthetic_rv_panel(&params, 260, TRADING_DELTA, -4.0, 77).unwrap();
    write_panel_csv(&panel_csv, &rv);

    let out = run(&[
        "estimate",
        "--input",
        panel_csv.to_str().unwrap(),
        "--log",
        "--alpha",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for table in ["components", "correlations", "pairs", "reversibility"] {
        assert!(text.contains(table), "missing table {table} in:\n{text}");
    }
    assert!(text.contains("S1") && text.contains("S2"), "ticker labels");
    assert!(text.contains("# alpha=0.01"));
}

#[test]
fn panel_validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();

    let dup = dir.path().join("dup.csv");
    fs::write(
        &dup,
        "date,AAA\n2020-01-02,1.5\n2020-01-02,1.6\n2020-01-03,1.4\n",
    )
    .unwrap();
    let out = run(&["estimate", "--input", dup.to_str().unwrap(), "--log"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("non-monotone"), "got: {}", stderr(&out));

    let zero = dir.path().join("zero.csv");
    fs::write(&zero, "date,AAA\n2020-01-02,1.5\n2020-01-03,0.0\n").unwrap();
    let out = run(&["estimate", "--input", zero.to_str().unwrap(), "--log"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("non-positive"), "got: {}", stderr(&out));

    let missing = dir.path().join("missing.csv");
    let out = run(&["estimate", "--input", missing.to_str().unwrap(), "--log"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dimension_plot_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("dim.csv");
    let out = run(&[
        "forecast",
        "--plot",
        "dimension",
        "--rho",
        "0.8",
        "--hurst-target",
        "0.4",
        "--hurst-other",
        "0.1",
        "--dims",
        "1,1000",
        "--times",
        "1,10",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_csv).unwrap();
    let got = csv_value(&text, "relative_msfe", "d=1000", "t=10");
    let want: f64 = msfe_exchangeable(1000, 0.8, 0.4, 0.1, 10.0, 1.0).unwrap()
        / msfe_univariate_one_obs(0.4f64, 1.0, 10.0, 1.0);
    assert_eq!(got.to_bits(), want.to_bits());
    let at_one = csv_value(&text, "relative_msfe", "d=1", "t=1");
    assert!((at_one - 1.0).abs() < 1e-12, "d=1 curve starts at 1, got {at_one}");
}

#[test]
fn empirical_runs_a_small_rolling_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let panel_csv = dir.path().join("panel.csv");
    let out_csv = dir.path().join("roll.csv");
    let params = ModelParams::bivariate(0.2, 0.5, 1.0, 1.0, 0.4, 0.0).unwrap();
    let rv = synthetic_rv_panel(&params, 180, TRADING_DELTA, -4.0, 55).unwrap();
    write_panel_csv(&panel_csv, &rv);

    let out = run(&[
        "empirical",
        "--input",
        panel_csv.to_str().unwrap(),
        "--window",
        "120",
        "--stride",
        "20",
        "--dims",
        "1,2",
        "--horizons",
        "1,2",
        "--vhar",
        "2",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_csv).unwrap();
    for table in ["rmsfe", "msfe_diff", "rolling_hurst"] {
        assert!(text.contains(&format!("# table={table}")), "missing {table}");
    }
    for model in ["fBm", "bfBm", "HAR", "VHAR2"] {
        let v = csv_value(&text, "rmsfe", model, "h=1");
        assert!(v.is_finite() && v > 0.0, "{model} rmsfe {v}");
    }
}

#[test]
fn har_forecasts_a_panel_column() {
    let dir = tempfile::tempdir().unwrap();
    let panel_csv = dir.path().join("panel.csv");
    let params = ModelParams::bivariate(0.3, 0.5, 1.0, 1.0, 0.2, 0.0).unwrap();
    let rv = synthetic_rv_panel(&params, 120, TRADING_DELTA, -4.0, 91).unwrap();
    write_panel_csv(&panel_csv, &rv);

    let out = run(&[
        "har",
        "--input",
        panel_csv.to_str().unwrap(),
        "--target",
        "2",
        "--horizons",
        "1,3",
        "--vhar",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("# target=S2"));
    assert!(text.contains("HAR") && text.contains("VHAR2"));
    assert!(text.contains("har_coefficients"));
}
