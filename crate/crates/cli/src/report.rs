//! Tabular results in human (6 significant digits) and CSV (full precision)
//! form, and atomic output files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{CliError, ErrorKind, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Value {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Float)
    }

    /// Reads a CSV field back into a value (`NA` is missing).
    pub fn parse_field(s: &str) -> Self {
        if s == "NA" {
            Value::Missing
        } else if let Ok(i) = s.parse::<u64>() {
            Value::Int(i)
        } else if let Ok(x) = s.parse::<f64>() {
            Value::Float(x)
        } else {
            Value::Text(s.to_string())
        }
    }

    pub fn csv(&self) -> String {
        match self {
            Value::Float(x) => x.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => "NA".to_string(),
        }
    }

    pub fn human(&self) -> String {
        match self {
            Value::Float(x) => sig6(*x),
            other => other.csv(),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as u64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// Formats like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    /// A one-row table from named values.
    pub fn record(pairs: Vec<(&str, Value)>) -> Self {
        let (header, row): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
        Self { header, rows: vec![row] }
    }

    /// Metadata comment lines, then header and rows at full precision.
    pub fn to_csv(&self, metadata: &[String]) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for line in metadata {
            writeln!(buf, "{line}").expect("write to memory");
        }
        let io = |e: csv::Error| CliError::new(ErrorKind::Output, e.to_string());
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv)).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::new(ErrorKind::Output, e.to_string()))?;
        drop(w);
        Ok(buf)
    }

    /// One `name  value` line per column for a single row, aligned columns
    /// otherwise.
    pub fn to_human(&self) -> String {
        let mut out = String::new();
        if self.rows.len() == 1 {
            let width = self.header.iter().map(String::len).max().unwrap_or(0);
            for (name, v) in self.header.iter().zip(&self.rows[0]) {
                writeln!(out, "{name:<width$}  {}", v.human()).expect("write to string");
            }
            return out;
        }
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Value::human).collect()).collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.header[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |fields: Vec<&str>| {
            fields.iter().zip(&widths).map(|(f, &w)| format!("{f:>w$}")).collect::<Vec<_>>().join("  ")
        };
        writeln!(out, "{}", line(self.header.iter().map(String::as_str).collect())).expect("write to string");
        for r in &cells {
            writeln!(out, "{}", line(r.iter().map(String::as_str).collect())).expect("write to string");
        }
        out
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let fail = |e: std::io::Error| CliError::new(ErrorKind::Output, format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
