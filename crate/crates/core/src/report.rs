//! Structured result types (norm reports, ratio scans) and their CSV/JSON
//! serialization. Float formatting is pinned to `{:.12e}` so artifact bytes
//! are reproducible across runs and thread counts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::GridSpec;

/// Grid parameters echoed into every report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridMeta {
    pub dimension: usize,
    pub modes_per_dim: usize,
    pub box_length: f64,
    pub mu: f64,
    pub fermi_floor: f64,
}

impl GridMeta {
    pub fn of(grid: &GridSpec) -> Self {
        GridMeta {
            dimension: grid.d(),
            modes_per_dim: grid.modes_per_dim(),
            box_length: grid.box_length(),
            mu: grid.mu(),
            fermi_floor: grid.fermi_floor(),
        }
    }
}

/// Named nonnegative scalars from a norm evaluation. Entries are kept in a
/// BTreeMap so serialization order is stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub entries: BTreeMap<String, f64>,
    pub grid: GridMeta,
    /// Unix seconds; excluded from CSV artifacts to keep them byte-stable.
    pub timestamp: u64,
}

impl NormReport {
    pub fn new(grid: &GridSpec) -> Self {
        NormReport { entries: BTreeMap::new(), grid: GridMeta::of(grid), timestamp: now_unix() }
    }

    pub fn set(&mut self, name: &str, value: f64) -> &mut Self {
        debug_assert!(value.is_finite() && value >= 0.0, "norm entry {name} = {value}");
        self.entries.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> f64 {
        self.entries[name]
    }

    pub fn finite_and_nonnegative(&self) -> bool {
        self.entries.values().all(|v| v.is_finite() && *v >= 0.0)
    }
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// One sample of an inequality scan: both sides and their ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioRow {
    pub sample: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// lhs/rhs, with 0/0 reported as 0 (flagged), never NaN.
    pub ratio: f64,
    pub zero_over_zero: bool,
    /// Scan-specific annotation (clipped points, regime tags, ...).
    pub note: String,
}

impl RatioRow {
    pub fn new(sample: usize, lhs: f64, rhs: f64) -> Self {
        let (ratio, zz) = safe_ratio(lhs, rhs);
        RatioRow { sample, lhs, rhs, ratio, zero_over_zero: zz, note: String::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Zero-over-zero convention: report 0 with a flag.
pub fn safe_ratio(lhs: f64, rhs: f64) -> (f64, bool) {
    if rhs == 0.0 {
        if lhs == 0.0 {
            (0.0, true)
        } else {
            (f64::INFINITY, false)
        }
    } else {
        (lhs / rhs, false)
    }
}

/// Result of an inequality LHS/RHS scan over an ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub grid: GridMeta,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn new(name: &str, grid: &GridSpec) -> Self {
        RatioReport { name: name.to_string(), grid: GridMeta::of(grid), rows: Vec::new() }
    }

    pub fn push(&mut self, row: RatioRow) {
        self.rows.push(row);
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// Minimum over rows with a meaningful (nonzero-rhs) ratio.
    pub fn min_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.zero_over_zero)
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_ratio(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.ratio).sum::<f64>() / self.rows.len() as f64
    }

    pub fn summary(&self) -> RatioSummary {
        RatioSummary {
            name: self.name.clone(),
            grid: self.grid.clone(),
            samples: self.rows.len(),
            min: self.min_ratio(),
            max: self.max_ratio(),
            mean: self.mean_ratio(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = CsvWriter::create(path, &["sample", "lhs", "rhs", "ratio", "zero_over_zero", "note"])?;
        for r in &self.rows {
            w.field_usize(r.sample);
            w.field_f64(r.lhs);
            w.field_f64(r.rhs);
            w.field_f64(r.ratio);
            w.field_usize(r.zero_over_zero as usize);
            w.field_str(&r.note);
            w.end_row()?;
        }
        w.finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioSummary {
    pub name: String,
    pub grid: GridMeta,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Least-squares line fit y = a·x + b with coefficient of determination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    LineFit { slope, intercept, r_squared }
}

/// CSV writer with pinned formatting: floats as `{:.12e}`, comma separator,
/// `\n` line endings.
pub struct CsvWriter {
    out: std::io::BufWriter<std::fs::File>,
    row: Vec<String>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out, row: Vec::new(), columns: header.len() })
    }

    pub fn field_f64(&mut self, v: f64) -> &mut Self {
        self.row.push(format_f64(v));
        self
    }

    pub fn field_usize(&mut self, v: usize) -> &mut Self {
        self.row.push(v.to_string());
        self
    }

    pub fn field_str(&mut self, v: &str) -> &mut Self {
        debug_assert!(!v.contains(','));
        self.row.push(v.to_string());
        self
    }

    pub fn end_row(&mut self) -> Result<()> {
        debug_assert_eq!(self.row.len(), self.columns);
        writeln!(self.out, "{}", self.row.join(","))?;
        self.row.clear();
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.12e}")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conventions() {
        let (r, z) = safe_ratio(0.0, 0.0);
        assert_eq!(r, 0.0);
        assert!(z);
        let (r, z) = safe_ratio(2.0, 4.0);
        assert_eq!(r, 0.5);
        assert!(!z);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let f = fit_line(&xs, &ys);
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn float_formatting_is_fixed_width_exponent() {
        assert_eq!(format_f64(0.0), "0.000000000000e0");
        assert_eq!(format_f64(1.5), "1.500000000000e0");
    }
}
