//! CSV and JSON output of case-study tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::destruction::DestructionReport;
use crate::error::{CaseError, Result};
use crate::program::SpeedupRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CaseError {
    CaseError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_rows<T: Serialize>(rows: &[T], dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    let path = dir.join(format!("{stem}.{}", if format == Format::Csv { "csv" } else { "json" }));
    let bytes = match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| write_err(&path, e))?;
            }
            w.into_inner().map_err(|e| write_err(&path, e))?
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows).map_err(|e| write_err(&path, e))?;
            v.push(b'\n');
            v
        }
    };
    fs::write(&path, bytes).map_err(|e| write_err(&path, e))?;
    Ok(path)
}

#[derive(Serialize)]
struct DestructionLine {
    method: String,
    steps_per_subarray: u64,
    subarray_ns: f64,
    bank_ns: f64,
    speedup_vs_rowclone: f64,
}

/// Columns: kernel, variant, width, latency_ns, baseline_latency_ns,
/// widest_used, speedup.
pub fn write_speedups(rows: &[SpeedupRow], dir: &Path, format: Format) -> Result<PathBuf> {
    write_rows(rows, dir, "speedup", format)
}

/// Columns: method, steps_per_subarray, subarray_ns, bank_ns,
/// speedup_vs_rowclone.
pub fn write_destruction(rows: &[DestructionReport], dir: &Path, format: Format) -> Result<PathBuf> {
    let lines: Vec<DestructionLine> = rows
        .iter()
        .map(|r| DestructionLine {
            method: r.method.to_string(),
            steps_per_subarray: r.steps_per_subarray,
            subarray_ns: r.subarray_ns,
            bank_ns: r.bank_ns,
            speedup_vs_rowclone: r.speedup_vs_rowclone,
        })
        .collect();
    write_rows(&lines, dir, "destruction", format)
}
