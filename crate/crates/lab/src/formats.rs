//! On-disk formats: FLD1 field snapshots, binary PGM heatmaps and CSV tables.

use crate::error::{LabError, LabResult};
use std::fmt::Write as _;
use std::path::Path;
use vortexlab::grid::Field2D;

pub const FLD1_MAGIC: &[u8; 4] = b"FLD1";

/// Contents of an FLD1 file. `ny` is the number of stored rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub geometry_tag: u8,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(f: &Field2D, t: f64) -> Self {
        Snapshot {
            nx: f.grid.nx,
            ny: f.grid.rows(),
            geometry_tag: f.grid.geometry.tag(),
            t,
            values: f.values.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(21 + 8 * self.values.len());
        b.extend_from_slice(FLD1_MAGIC);
        b.extend_from_slice(&(self.nx as u32).to_le_bytes());
        b.extend_from_slice(&(self.ny as u32).to_le_bytes());
        b.push(self.geometry_tag);
        b.extend_from_slice(&self.t.to_le_bytes());
        for v in &self.values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> LabResult<Self> {
        if b.len() < 21 || &b[..4] != FLD1_MAGIC {
            return Err(LabError::Format("missing FLD1 header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let (nx, ny) = (u32_at(4), u32_at(8));
        let geometry_tag = b[12];
        if geometry_tag > 1 {
            return Err(LabError::Format(format!("unknown geometry tag {geometry_tag}")));
        }
        let t = f64_at(13);
        let count = nx
            .checked_mul(ny)
            .ok_or_else(|| LabError::Format("header size overflow".into()))?;
        if b.len() != 21 + 8 * count {
            return Err(LabError::Format(format!(
                "expected {} value bytes for {nx}x{ny}, found {}",
                8 * count,
                b.len() - 21
            )));
        }
        let values: Vec<f64> = (0..count).map(|k| f64_at(21 + 8 * k)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Format("non-finite sample".into()));
        }
        Ok(Snapshot {
            nx,
            ny,
            geometry_tag,
            t,
            values,
        })
    }

    pub fn write(&self, path: &Path) -> LabResult<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| LabError::io(path, e))
    }

    pub fn read(path: &Path) -> LabResult<Self> {
        let b = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
        Self::from_bytes(&b)
    }
}

/// 8-bit binary graymap of row-major samples; the first stored row is the
/// bottom of the image. The value range is recorded in a comment line.
pub fn pgm_bytes(nx: usize, ny: usize, values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if values.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let mut out = format!("P5\n# min={lo:e} max={hi:e}\n{nx} {ny}\n255\n").into_bytes();
    let span = hi - lo;
    for j in (0..ny).rev() {
        for i in 0..nx {
            let v = values[j * nx + i];
            let g = if span > 0.0 { ((v - lo) / span * 255.0).round() } else { 0.0 };
            out.push(g.clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn write_pgm(path: &Path, nx: usize, ny: usize, values: &[f64]) -> LabResult<()> {
    std::fs::write(path, pgm_bytes(nx, ny, values)).map_err(|e| LabError::io(path, e))
}

/// `(min, max)` from the comment line of a PGM written by [`pgm_bytes`].
pub fn pgm_range(bytes: &[u8]) -> Option<(f64, f64)> {
    let text = String::from_utf8_lossy(&bytes[..bytes.len().min(256)]);
    let line = text.lines().find(|l| l.starts_with("# min="))?;
    let mut it = line.trim_start_matches("# ").split_whitespace();
    let lo = it.next()?.strip_prefix("min=")?.parse().ok()?;
    let hi = it.next()?.strip_prefix("max=")?.parse().ok()?;
    Some((lo, hi))
}

/// Numeric table written with a header row. Floats use the shortest
/// round-trip scientific form, so equal data give identical bytes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn parse_csv(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let columns: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for l in lines {
            let r: Vec<f64> = l.split(',').map(|c| c.parse().ok()).collect::<Option<_>>()?;
            if r.len() != columns.len() {
                return None;
            }
            rows.push(r);
        }
        Some(Table { columns, rows })
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:e}")
    }
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}
