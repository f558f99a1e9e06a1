//! Small file helpers shared by the persistence formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn storage(path: &Path, reason: impl ToString) -> Error {
    Error::Storage {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| storage(path, "not a file path"))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| storage(path, e))?;
    serde_json::from_str(&s).map_err(|e| storage(path, e))
}

/// One value per line.
pub fn write_column(path: &Path, values: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 24);
    for v in values {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    let s = fs::read_to_string(path).map_err(|e| storage(path, e))?;
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| storage(path, e)))
        .collect()
}

/// Comma-separated table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(f64::to_string).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let s = fs::read_to_string(path).map_err(|e| storage(path, e))?;
    let mut lines = s.lines();
    let header = lines
        .next()
        .ok_or_else(|| storage(path, "empty table"))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| storage(path, e)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

/// Appends one line, creating the file if needed.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}
