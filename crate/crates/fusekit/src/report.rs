//! Report files: one row per table cell, rounded to three decimals plus the
//! full-precision value.
//!
//! ```text
//! cell,value,full
//! AVG_ACC,0.893,0.8933333333333333
//! ```

use std::collections::HashSet;
use std::path::Path;

use fusekit_core::metrics::MetricReport;

use crate::error::{FormatError, Result};
use crate::text::{csv_lines, parse_f64, parse_table, read_file, write_file};

pub const REPORT_HEADER: [&str; 3] = ["cell", "value", "full"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell {
    pub name: String,
    /// Value rounded to three decimals.
    pub value: f64,
    pub full: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportFile {
    pub cells: Vec<ReportCell>,
}

fn round3(x: f64) -> f64 {
    format!("{x:.3}").parse().expect("formatted float")
}

fn milli(x: f64) -> i64 {
    (x * 1000.0).round() as i64
}

impl ReportFile {
    pub fn from_report(report: &MetricReport) -> Self {
        ReportFile {
            cells: report
                .cells()
                .into_iter()
                .map(|(name, full)| ReportCell {
                    name,
                    value: round3(full),
                    full,
                })
                .collect(),
        }
    }

    /// Cells known only to three decimals (e.g. published values).
    pub fn from_rounded<'a>(cells: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        ReportFile {
            cells: cells
                .into_iter()
                .map(|(name, v)| ReportCell {
                    name: name.to_string(),
                    value: v,
                    full: v,
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.name == name)
    }

    /// Rows whose `AVG_` cell is not the mean of its `M_` and `SK_` cells.
    ///
    /// The full column is checked against `full_tolerance`. When a row holds
    /// only three-decimal values (`full == value`), the check is exact in
    /// thousandths: the average may differ from the mean by at most 0.0005.
    /// Rows with full precision skip that step, since independent rounding of
    /// the three cells can drift by more than half a unit.
    pub fn coherence_violations(&self, full_tolerance: f64) -> Vec<String> {
        let mut out = Vec::new();
        for avg in self.cells.iter().filter(|c| c.name.starts_with("AVG_")) {
            let metric = &avg.name["AVG_".len()..];
            let (Some(m), Some(sk)) = (self.get(&format!("M_{metric}")), self.get(&format!("SK_{metric}")))
            else {
                out.push(format!("{}: missing M_{metric} or SK_{metric}", avg.name));
                continue;
            };
            let rounded_only = [avg, m, sk].iter().all(|c| c.full == c.value);
            if rounded_only && (2 * milli(avg.value) - milli(m.value) - milli(sk.value)).abs() > 1 {
                out.push(format!(
                    "{}: {:.3} vs mean of {:.3} and {:.3}",
                    avg.name, avg.value, m.value, sk.value
                ));
            }
            if (avg.full - (m.full + sk.full) / 2.0).abs() > full_tolerance {
                out.push(format!("{}: full value {} vs mean {}", avg.name, avg.full, (m.full + sk.full) / 2.0));
            }
        }
        out
    }
}

pub fn parse_report_text(path: &Path, text: &str) -> Result<ReportFile> {
    let (_, table) = parse_table(path, text, &[&REPORT_HEADER])?;
    let mut seen = HashSet::new();
    let mut cells = Vec::with_capacity(table.rows.len());
    for (line, f) in table.rows {
        if !seen.insert(f[0].clone()) {
            return Err(FormatError::parse(path, line, format!("duplicate cell `{}`", f[0])));
        }
        cells.push(ReportCell {
            value: parse_f64(path, line, "value", &f[1])?,
            full: parse_f64(path, line, "full", &f[2])?,
            name: f[0].clone(),
        });
    }
    Ok(ReportFile { cells })
}

pub fn parse_report(path: &Path) -> Result<ReportFile> {
    parse_report_text(path, &read_file(path)?)
}

pub fn format_report(report: &ReportFile) -> String {
    csv_lines(
        &REPORT_HEADER,
        report
            .cells
            .iter()
            .map(|c| [c.name.clone(), format!("{:.3}", c.value), c.full.to_string()]),
    )
}

pub fn write_report(path: &Path, report: &ReportFile) -> Result<()> {
    write_file(path, &format_report(report))
}
