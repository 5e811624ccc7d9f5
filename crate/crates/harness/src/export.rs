//! CSV / JSON export.
//!
//! Column orders are frozen:
//!
//! * `summary.csv`: operation, x, n, t1, t2, pattern, temperature_c, vpp,
//!   trials, groups, mean, min, q1, median, q3, max
//! * `groups.csv`: operation, x, n, t1, t2, pattern, temperature_c, vpp,
//!   bank, subarray, group, first_row, second_row, success
//! * `plot.csv`: series, x, y (x = activation count, y = mean success)

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::run::ParamReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(HarnessError::Config(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    operation: String,
    x: Option<usize>,
    n: u32,
    t1: f64,
    t2: f64,
    pattern: &'a str,
    temperature_c: f64,
    vpp: f64,
    trials: usize,
    groups: usize,
    mean: f64,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

#[derive(Serialize)]
struct GroupRow<'a> {
    operation: String,
    x: Option<usize>,
    n: u32,
    t1: f64,
    t2: f64,
    pattern: &'a str,
    temperature_c: f64,
    vpp: f64,
    bank: usize,
    subarray: u32,
    group: usize,
    first_row: u32,
    second_row: u32,
    success: f64,
}

#[derive(Serialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

fn summary_rows(reports: &[ParamReport]) -> Vec<SummaryRow<'_>> {
    reports
        .iter()
        .map(|r| {
            let k = &r.key;
            let s = &r.summary;
            SummaryRow {
                operation: k.operation.to_string(),
                x: k.x,
                n: k.n,
                t1: k.t1,
                t2: k.t2,
                pattern: &k.pattern,
                temperature_c: k.temperature_c,
                vpp: k.vpp,
                trials: r.trials,
                groups: s.count,
                mean: s.mean,
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
            }
        })
        .collect()
}

fn group_rows(reports: &[ParamReport]) -> Vec<GroupRow<'_>> {
    reports
        .iter()
        .flat_map(|r| {
            let k = &r.key;
            r.samples.iter().map(move |g| GroupRow {
                operation: k.operation.to_string(),
                x: k.x,
                n: k.n,
                t1: k.t1,
                t2: k.t2,
                pattern: &k.pattern,
                temperature_c: k.temperature_c,
                vpp: k.vpp,
                bank: g.bank,
                subarray: g.subarray,
                group: g.group,
                first_row: g.first_row,
                second_row: g.second_row,
                success: g.success,
            })
        })
        .collect()
}

/// Mean success against activation count, one series per remaining key.
pub fn plot_points(reports: &[ParamReport]) -> Vec<PlotPoint> {
    reports
        .iter()
        .map(|r| {
            let k = &r.key;
            let x = k.x.map_or(String::new(), |x| format!(" MAJ{x}"));
            PlotPoint {
                series: format!(
                    "{}{x} t1={} t2={} {} {}C {}V",
                    k.operation, k.t1, k.t2, k.pattern, k.temperature_c, k.vpp
                ),
                x: f64::from(k.n),
                y: r.summary.mean,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Write reports under `dir` and return the files written, in order.
pub fn export(reports: &[ParamReport], dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(HarnessError::EmptyReports);
    }
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            let p = dir.join("summary.csv");
            write_csv(&p, &summary_rows(reports))?;
            written.push(p);
            let p = dir.join("groups.csv");
            write_csv(&p, &group_rows(reports))?;
            written.push(p);
        }
        Format::Json => {
            let p = dir.join("summary.json");
            write_json(&p, reports)?;
            written.push(p);
        }
    }
    let p = dir.join("plot.csv");
    write_csv(&p, &plot_points(reports))?;
    written.push(p);
    Ok(written)
}
