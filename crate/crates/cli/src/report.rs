//! Report rows and the CSV / aligned-text writers.
//!
//! Columns are schema-stable:
//! `d, lambda, kappa, event, ell, estimator, grid, status, mean, rv, rv_se,
//! m, ci_low, ci_high, wall_ms, seed, target_rv, mode`.
//! Numbers use `.` decimals and scientific notation with 6 significant
//! digits; unavailable values (no-hit rv) are left empty.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use gilbert_rare::{EstimateReport, EstimateStatus, EventSpec};

pub const COLUMNS: [&str; 18] = [
    "d", "lambda", "kappa", "event", "ell", "estimator", "grid", "status", "mean", "rv",
    "rv_se", "m", "ci_low", "ci_high", "wall_ms", "seed", "target_rv", "mode",
];

/// One table cell, ready for serialization.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub dim: usize,
    pub lambda: f64,
    pub kappa: f64,
    pub event: EventSpec,
    pub report: EstimateReport,
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

impl ReportRow {
    /// Run mode marker: `standard` at the reference target, `relaxed` above
    /// it, `no-hit` when nothing landed in the event.
    pub fn mode(&self) -> &'static str {
        if self.report.status == EstimateStatus::NoHit {
            "no-hit"
        } else if self.report.target_rv_of_mean > 1e-3 {
            "relaxed"
        } else {
            "standard"
        }
    }

    pub fn fields(&self) -> Vec<String> {
        let r = &self.report;
        vec![
            self.dim.to_string(),
            sci(self.lambda),
            sci(self.kappa),
            self.event.kind.to_string(),
            self.event.ell.to_string(),
            r.estimator.to_string(),
            r.grid_k.map(|k| k.to_string()).unwrap_or_default(),
            r.status.to_string(),
            sci(r.mean),
            r.rv.map(sci).unwrap_or_default(),
            r.rv_se.map(sci).unwrap_or_default(),
            r.m.to_string(),
            sci(r.ci_low),
            sci(r.ci_high),
            format!("{:.1}", r.wall_ms),
            r.seed.to_string(),
            sci(r.target_rv_of_mean),
            self.mode().to_string(),
        ]
    }
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.fields().join(","));
        out.push('\n');
    }
    out
}

/// Fixed-width table for terminal reading.
pub fn to_text_table(rows: &[ReportRow]) -> String {
    let mut cells: Vec<Vec<String>> =
        vec![COLUMNS.iter().map(|c| c.to_string()).collect()];
    cells.extend(rows.iter().map(|r| r.fields()));
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        for (c, field) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{field:>width$}", width = widths[c]);
        }
        out.push('\n');
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.txt`, creating parent directories.
pub fn write_report(stem: &Path, rows: &[ReportRow], extra_text: &str) -> io::Result<(PathBuf, PathBuf)> {
    if let Some(parent) = stem.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let csv_path = stem.with_extension("csv");
    let txt_path = stem.with_extension("txt");
    fs::write(&csv_path, to_csv(rows))?;
    let mut text = to_text_table(rows);
    if !extra_text.is_empty() {
        text.push('\n');
        text.push_str(extra_text);
        if !extra_text.ends_with('\n') {
            text.push('\n');
        }
    }
    fs::write(&txt_path, text)?;
    Ok((csv_path, txt_path))
}
