//! CSV ingestion, plain-text config documents, and report rendering.
//!
//! Data files are ordinary CSVs with optional `#`-prefixed comment
//! lines; every file this crate writes starts with a config-echo
//! header so a result can be traced back to the run that produced it.
//! Numbers in data CSVs use the shortest representation that parses
//! back to the identical float, making write → read round trips
//! bit-exact.

use std::collections::BTreeMap;
use std::io::{BufReader, Read, Write as IoWrite};
use std::path::Path;

use crate::experiments::{ExperimentReport, ReportTable};
use crate::kernel::ModelParams;
use crate::linalg::Mat;
use crate::simulate::SamplePath;
use crate::{Error, Result};

/// Trading-day time step used for daily panels.
pub const TRADING_DELTA: f64 = 1.0 / 252.0;

// ---------------------------------------------------------------------------
// Realized-volatility panels
// ---------------------------------------------------------------------------

/// A dated panel of realized volatilities, one column per ticker.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelData {
    /// ISO-8601 dates, strictly increasing.
    pub dates: Vec<String>,
    pub tickers: Vec<String>,
    /// Rows align with `dates`, columns with `tickers`.
    pub values: Mat<f64>,
    /// Whether `values` holds log volatilities.
    pub log_scale: bool,
    /// Time step between consecutive rows.
    pub delta: f64,
}

impl PanelData {
    pub fn n(&self) -> usize {
        self.dates.len()
    }

    /// Returns the panel as an anchored sample path: the first row is
    /// the time origin and the remaining rows become observations at
    /// `Δ, …, (n−1)Δ`. Without `anchor`, rows are used as-is at
    /// `Δ, …, nΔ`.
    pub fn to_path(&self, anchor: bool) -> Result<SamplePath> {
        if !self.log_scale {
            return Err(Error::InvalidParams(
                "model paths are built from log volatilities; load the panel with the log \
                 transform first"
                    .into(),
            ));
        }
        let skip = anchor as usize;
        if self.n() <= skip + 1 {
            return Err(Error::InsufficientData(format!(
                "panel has {} rows; need at least {}",
                self.n(),
                skip + 2
            )));
        }
        let n = self.n() - skip;
        let d = self.tickers.len();
        let mut levels = Mat::zeros(n, d);
        for r in 0..n {
            for c in 0..d {
                let base = if anchor { self.values.get(0, c) } else { 0.0 };
                levels.set(r, c, self.values.get(r + skip, c) - base);
            }
        }
        SamplePath::from_levels(self.delta, levels)
    }
}

/// Reads a `date,TICK1,TICK2,…` CSV. With `log`, values must be
/// strictly positive and are replaced by their natural logs.
pub fn load_panel<R: Read>(reader: R, log: bool) -> Result<PanelData> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("panel header: {e}")))?
        .clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("date") {
        return Err(Error::Data(format!(
            "panel header must be 'date,TICK1,…', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();

    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("panel row {}: {e}", line + 2)))?;
        if record.len() != tickers.len() + 1 {
            return Err(Error::Data(format!(
                "panel row {}: expected {} fields, got {}",
                line + 2,
                tickers.len() + 1,
                record.len()
            )));
        }
        let date = record[0].to_string();
        if let Some(prev) = dates.last() {
            if *prev >= date {
                return Err(Error::Data(format!(
                    "non-monotone dates: '{date}' follows '{prev}' at row {}",
                    line + 2
                )));
            }
        }
        let mut row = Vec::with_capacity(tickers.len());
        for (c, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Data(format!(
                    "non-numeric cell '{field}' for {} at row {}",
                    tickers[c],
                    line + 2
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite value for {} at row {}",
                    tickers[c],
                    line + 2
                )));
            }
            if log && v <= 0.0 {
                return Err(Error::Data(format!(
                    "non-positive RV {v} for {} at row {}: cannot take logs",
                    tickers[c],
                    line + 2
                )));
            }
            row.push(if log { v.ln() } else { v });
        }
        dates.push(date);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("panel has no data rows".into()));
    }
    Ok(PanelData {
        dates,
        tickers,
        values: Mat::from_rows(rows),
        log_scale: log,
        delta: TRADING_DELTA,
    })
}

pub fn load_panel_path(path: &Path, log: bool) -> Result<PanelData> {
    let file = std::fs::File::open(path)?;
    load_panel(BufReader::new(file), log)
}

// ---------------------------------------------------------------------------
// Sample-path CSVs
// ---------------------------------------------------------------------------

/// Writes a path as `time,B1,…,Bd` rows after `# key=value` header
/// comments. Floats use shortest-round-trip formatting.
pub fn write_path_csv<W: IoWrite>(
    path: &SamplePath,
    config: &[(String, String)],
    mut w: W,
) -> Result<()> {
    for (k, v) in config {
        writeln!(w, "# {k}={v}")?;
    }
    let d = path.d();
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["time".to_string()];
    header.extend((1..=d).map(|i| format!("B{i}")));
    wtr.write_record(&header)
        .map_err(|e| Error::Data(format!("path csv: {e}")))?;
    let times = path.times();
    for k in 0..path.n() {
        let mut row = vec![format_float(times[k])];
        for i in 0..d {
            row.push(format_float(path.level(k, i)));
        }
        wtr.write_record(&row)
            .map_err(|e| Error::Data(format!("path csv: {e}")))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a path CSV produced by [`write_path_csv`] (or hand-written in
/// the same shape). The time step is inferred from the time column and
/// must be uniform.
pub fn read_path_csv<R: Read>(reader: R) -> Result<SamplePath> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("path header: {e}")))?
        .clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("time") {
        return Err(Error::Data(
            "path CSV header must be 'time,B1,…' with at least one component".into(),
        ));
    }
    let d = headers.len() - 1;
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("path row {}: {e}", line + 2)))?;
        if record.len() != d + 1 {
            return Err(Error::Data(format!(
                "path row {}: expected {} fields, got {}",
                line + 2,
                d + 1,
                record.len()
            )));
        }
        let mut vals = Vec::with_capacity(d + 1);
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Data(format!("non-numeric cell '{field}' at row {}", line + 2)))?;
            vals.push(v);
        }
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    if times.is_empty() {
        return Err(Error::Data("path CSV has no data rows".into()));
    }
    let delta = times[0];
    if delta <= 0.0 {
        return Err(Error::Data(format!(
            "first observation time {delta} must be positive (paths start at Δ)"
        )));
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = (k + 1) as f64 * delta;
        if (t - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::Data(format!(
                "non-uniform time grid: row {} has t={t}, expected {expected}",
                k + 2
            )));
        }
    }
    SamplePath::from_levels(delta, Mat::from_rows(rows))
}

// ---------------------------------------------------------------------------
// Config documents
// ---------------------------------------------------------------------------

/// A flat key/value document with named matrix blocks:
///
/// ```text
/// # comment
/// delta = 0.004
/// hurst = 0.1, 0.4
/// rho = [
///   1.0, 0.4
///   0.4, 1.0
/// ]
/// ```
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigDoc {
    pub scalars: BTreeMap<String, String>,
    pub matrices: BTreeMap<String, Mat<f64>>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<ConfigDoc> {
        let mut doc = ConfigDoc::default();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((ln, raw)) = lines.next() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Data(format!("config line {}: expected 'key = value'", ln + 1))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Data(format!("config line {}: empty key", ln + 1)));
            }
            let value = value.trim();
            if value == "[" {
                let mut rows: Vec<Vec<f64>> = Vec::new();
                let mut closed = false;
                for (mln, mraw) in lines.by_ref() {
                    let mline = strip_comment(mraw);
                    if mline.is_empty() {
                        continue;
                    }
                    if mline == "]" {
                        closed = true;
                        break;
                    }
                    let row = parse_number_list(mline).map_err(|e| {
                        Error::Data(format!("config line {}: {e}", mln + 1))
                    })?;
                    if let Some(first) = rows.first() {
                        if row.len() != first.len() {
                            return Err(Error::Data(format!(
                                "config line {}: ragged matrix '{key}'",
                                mln + 1
                            )));
                        }
                    }
                    rows.push(row);
                }
                if !closed {
                    return Err(Error::Data(format!(
                        "config: matrix '{key}' opened at line {} is never closed",
                        ln + 1
                    )));
                }
                if rows.is_empty() {
                    return Err(Error::Data(format!("config: matrix '{key}' is empty")));
                }
                doc.matrices.insert(key, Mat::from_rows(rows));
            } else {
                doc.scalars.insert(key, value.to_string());
            }
        }
        Ok(doc)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.scalars {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (k, m) in &self.matrices {
            out.push_str(&format!("{k} = [\n"));
            for r in 0..m.rows() {
                let row: Vec<String> = (0..m.cols()).map(|c| format_float(m.get(r, c))).collect();
                out.push_str(&format!("  {}\n", row.join(", ")));
            }
            out.push_str("]\n");
        }
        out
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.scalars.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::Data(format!("config key '{key}': '{s}' is not a number"))),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.scalars.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::Data(format!("config key '{key}': '{s}' is not an integer"))),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.scalars.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true" | "1" | "yes") => Ok(Some(true)),
            Some("false" | "0" | "no") => Ok(Some(false)),
            Some(s) => Err(Error::Data(format!(
                "config key '{key}': '{s}' is not a boolean"
            ))),
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.scalars.get(key) {
            None => Ok(None),
            Some(s) => parse_number_list(s)
                .map(Some)
                .map_err(|e| Error::Data(format!("config key '{key}': {e}"))),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

fn parse_number_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.is_empty() {
        return Err("empty number list".into());
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| format!("'{p}' is not a number"))
        })
        .collect()
}

/// Serializes model parameters as a config document (keys `hurst`,
/// `sigma2`, matrices `rho`, `eta`).
pub fn model_to_config(params: &ModelParams) -> ConfigDoc {
    let d = params.d();
    let mut doc = ConfigDoc::default();
    doc.scalars.insert(
        "hurst".into(),
        params.hursts().iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(", "),
    );
    doc.scalars.insert(
        "sigma2".into(),
        params.sigma2s().iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(", "),
    );
    let mut rho = Mat::identity(d);
    let mut eta = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                rho.set(i, j, params.rho(i, j));
                eta.set(i, j, params.eta(i, j));
            }
        }
    }
    doc.matrices.insert("rho".into(), rho);
    doc.matrices.insert("eta".into(), eta);
    doc
}

/// Builds model parameters from a config document. `hurst` and
/// `sigma2` are required; `rho` defaults to the identity and `eta` to
/// zero. A bivariate shorthand also accepts scalar `rho`/`eta` keys.
pub fn model_from_config(doc: &ConfigDoc) -> Result<ModelParams> {
    let hurst = doc
        .get_f64_list("hurst")?
        .ok_or_else(|| Error::Data("config is missing 'hurst'".into()))?;
    let sigma2 = doc
        .get_f64_list("sigma2")?
        .unwrap_or_else(|| vec![1.0; hurst.len()]);
    let d = hurst.len();
    if sigma2.len() != d {
        return Err(Error::Data(format!(
            "config: {d} Hurst exponents but {} variances",
            sigma2.len()
        )));
    }

    let mut rho = match doc.matrices.get("rho") {
        Some(m) => m.clone(),
        None => Mat::identity(d),
    };
    let mut eta = match doc.matrices.get("eta") {
        Some(m) => m.clone(),
        None => Mat::zeros(d, d),
    };
    // Bivariate shorthand: `rho = 0.4` / `eta = 0.3` as scalars.
    if d == 2 {
        if !doc.matrices.contains_key("rho") {
            if let Some(r) = doc.get_f64("rho")? {
                rho = Mat::from_rows(vec![vec![1.0, r], vec![r, 1.0]]);
            }
        }
        if !doc.matrices.contains_key("eta") {
            if let Some(e) = doc.get_f64("eta")? {
                eta = Mat::from_rows(vec![vec![0.0, e], vec![-e, 0.0]]);
            }
        }
    }
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::Data(format!(
            "config: rho must be {d}×{d}, got {}×{}",
            rho.rows(),
            rho.cols()
        )));
    }
    if eta.rows() != d || eta.cols() != d {
        return Err(Error::Data(format!(
            "config: eta must be {d}×{d}, got {}×{}",
            eta.rows(),
            eta.cols()
        )));
    }
    ModelParams::new(hurst, sigma2, rho, eta)
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

/// Shortest string that parses back to the identical float.
pub fn format_float(v: f64) -> String {
    let mut buf = ryu_format(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // `{}` on f64 is the shortest round-trip representation.
    format!("{v}")
}

/// Formats with at least `sig` significant digits, switching to
/// scientific notation outside a readable magnitude range.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{:.*e}", sig.saturating_sub(1), v);
    }
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Renders a report as aligned text tables under `# key=value`
/// provenance headers.
pub fn render_report(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# kind={}\n", report.kind));
    for (k, v) in &report.config {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!(
        "# failures={} runtime_secs={:.3}\n",
        report.failures, report.runtime_secs
    ));
    for table in &report.tables {
        out.push('\n');
        out.push_str(&render_table(table));
    }
    out
}

fn render_table(table: &ReportTable) -> String {
    let label_width = table
        .rows
        .iter()
        .map(|r| r.label.len())
        .chain([table.name.len()])
        .max()
        .unwrap_or(8)
        .max(8);
    let cells: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| r.values.iter().map(|&v| format_sig(v, 6)).collect())
        .collect();
    let mut widths: Vec<usize> = table.columns.iter().map(String::len).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    out.push_str(&format!("{:<label_width$}", table.name));
    for (w, c) in widths.iter().zip(&table.columns) {
        out.push_str(&format!("  {c:>w$}"));
    }
    out.push('\n');
    for (row, cell_row) in table.rows.iter().zip(&cells) {
        out.push_str(&format!("{:<label_width$}", row.label));
        for (w, cell) in widths.iter().zip(cell_row) {
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// Writes a report as CSV: provenance comments, then each table as a
/// `# table=<name>` block with a `label,…` header.
pub fn write_report_csv<W: IoWrite>(report: &ExperimentReport, mut w: W) -> Result<()> {
    writeln!(w, "# kind={}", report.kind)?;
    for (k, v) in &report.config {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "# failures={}", report.failures)?;
    for table in &report.tables {
        writeln!(w, "# table={}", table.name)?;
        let mut wtr = csv::Writer::from_writer(&mut w);
        let mut header = vec!["label".to_string()];
        header.extend(table.columns.iter().cloned());
        wtr.write_record(&header)
            .map_err(|e| Error::Data(format!("report csv: {e}")))?;
        for row in &table.rows {
            let mut rec = vec![row.label.clone()];
            rec.extend(row.values.iter().map(|&v| format_float(v)));
            wtr.write_record(&rec)
                .map_err(|e| Error::Data(format!("report csv: {e}")))?;
        }
        wtr.flush()?;
        drop(wtr);
    }
    Ok(())
}
