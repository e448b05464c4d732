//! CSV and markdown rendering of suite results.

use std::fmt::Write as _;

use thiserror::Error;

use crate::suite::ThresholdRecord;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no records to report")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    Malformed(String),
}

pub const CSV_HEADER: [&str; 10] = [
    "problem",
    "m",
    "n",
    "algorithm",
    "threshold",
    "mean_iters",
    "mean_seconds",
    "mean_obj",
    "mean_er",
    "failures",
];

/// Context printed above the markdown table.
#[derive(Debug, Clone, Default)]
pub struct ReportMeta {
    pub max_iters: usize,
    /// `(instance seed, L estimate)`.
    pub lipschitz: Vec<(u64, f64)>,
}

fn opt(v: Option<f64>) -> String {
    // `Display` for f64 prints the shortest string that parses back exactly
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with full-precision numbers; blank cells stand for missing values.
pub fn to_csv(records: &[ThresholdRecord]) -> Result<String, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.problem.clone(),
            r.m.to_string(),
            r.n.to_string(),
            r.algorithm.clone(),
            r.threshold.to_string(),
            opt(r.mean_iters),
            opt(r.mean_seconds),
            opt(r.mean_obj),
            opt(r.mean_er),
            r.failures.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, ReportError> {
    let s = rec.get(i).ok_or_else(|| ReportError::Malformed(format!("missing column {}", CSV_HEADER[i])))?;
    s.parse()
        .map_err(|_| ReportError::Malformed(format!("{}: '{s}'", CSV_HEADER[i])))
}

fn opt_field(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>, ReportError> {
    match rec.get(i) {
        Some("") => Ok(None),
        _ => field(rec, i).map(Some),
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<ThresholdRecord>, ReportError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(ReportError::Malformed("unexpected header".into()));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ThresholdRecord {
                problem: field(&rec, 0)?,
                m: field(&rec, 1)?,
                n: field(&rec, 2)?,
                algorithm: field(&rec, 3)?,
                threshold: field(&rec, 4)?,
                mean_iters: opt_field(&rec, 5)?,
                mean_seconds: opt_field(&rec, 6)?,
                mean_obj: opt_field(&rec, 7)?,
                mean_er: opt_field(&rec, 8)?,
                failures: field(&rec, 9)?,
            })
        })
        .collect()
}

/// `x` rounded to four significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        format!("{:.*}", (3 - mag).max(0) as usize, x)
    } else {
        format!("{x:.3e}")
    }
}

/// One row per algorithm and threshold. An iteration cell reads
/// `>max_iters` when any instance failed to cross.
pub fn to_markdown(records: &[ThresholdRecord], meta: &ReportMeta) -> Result<String, ReportError> {
    let first = records.first().ok_or(ReportError::Empty)?;
    let mut out = String::new();
    let _ = writeln!(out, "problem: {}, m = {}, n = {}", first.problem, first.m, first.n);
    if !meta.lipschitz.is_empty() {
        let ls: Vec<String> = meta
            .lipschitz
            .iter()
            .map(|(s, l)| format!("{s}: {}", sig4(*l)))
            .collect();
        let _ = writeln!(out, "L estimates by instance seed: {}", ls.join(", "));
    }
    out.push('\n');
    let show_er = records.iter().any(|r| r.mean_er.is_some());
    out.push_str("| algorithm | threshold | Iter(k) | T(s) | Ψ(x_ag) |");
    out.push_str(if show_er { " er(x_ag) |\n" } else { "\n" });
    out.push_str("|---|---|---|---|---|");
    out.push_str(if show_er { "---|\n" } else { "\n" });
    let cell = |v: Option<f64>| v.map(sig4).unwrap_or_else(|| "-".into());
    for r in records {
        let iters = if r.failures > 0 {
            format!(">{}", meta.max_iters)
        } else {
            cell(r.mean_iters)
        };
        let _ = write!(
            out,
            "| {} | {} | {} | {} | {} |",
            r.algorithm,
            sig4(r.threshold),
            iters,
            cell(r.mean_seconds),
            cell(r.mean_obj)
        );
        if show_er {
            let _ = write!(out, " {} |", cell(r.mean_er));
        }
        out.push('\n');
    }
    Ok(out)
}
