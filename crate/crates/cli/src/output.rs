//! CSV and JSON artifacts with a fixed layout.

use std::fs;
use std::path::Path as FsPath;

use roughinc::Path;
use serde_json::Value;

use crate::error::CliResult;

/// Floats in CSV use 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(file: &FsPath, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    if let Some(dir) = file.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, <prefix>1, ..., <prefix>n`.
pub fn path_header(prefix: &str, dim: usize) -> Vec<String> {
    std::iter::once("t".to_string()).chain((1..=dim).map(|k| format!("{prefix}{k}"))).collect()
}

pub fn path_rows(p: &Path) -> Vec<Vec<f64>> {
    (0..p.len())
        .map(|i| std::iter::once(p.time(i)).chain(p.point(i).iter().copied()).collect())
        .collect()
}

pub fn write_path(file: &FsPath, prefix: &str, p: &Path) -> CliResult<()> {
    write_csv(file, &path_header(prefix, p.dim()), &path_rows(p))
}

/// Pretty JSON with a trailing newline; object keys are sorted.
pub fn write_json(file: &FsPath, value: &Value) -> CliResult<()> {
    if let Some(dir) = file.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(file, text)?;
    Ok(())
}

/// Read a path from a CSV whose first column is time.
pub fn read_path(file: &FsPath) -> CliResult<Path> {
    let mut r = csv::Reader::from_path(file)?;
    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| crate::error::CliError::Config(format!("{}: {e}", file.display())))?;
        if vals.len() < 2 {
            return Err(crate::error::CliError::Config(format!("{}: need a time column and values", file.display())));
        }
        let d = *dim.get_or_insert(vals.len() - 1);
        if d != vals.len() - 1 {
            return Err(crate::error::CliError::Config(format!("{}: ragged rows", file.display())));
        }
        times.push(vals[0]);
        data.extend_from_slice(&vals[1..]);
    }
    let dim = dim.ok_or_else(|| crate::error::CliError::Config(format!("{}: empty path", file.display())))?;
    Ok(Path::new(times, dim, data)?)
}
