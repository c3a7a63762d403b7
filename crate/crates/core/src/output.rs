//! Plain-text writers: CSV tables and P2 graymaps.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::{CMatrix, Result};

/// Header plus rows, comma-separated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Formats a float for CSV; infinities become `inf`, very small or large
/// magnitudes use exponent notation.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if a == 0.0 || (1e-4..1e15).contains(&a) || v.is_nan() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_matrix_csv(path: &Path, m: &CMatrix) -> Result<()> {
    let mut t = Table::new(["row", "col", "re", "im"]);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            t.push(vec![
                r.to_string(),
                c.to_string(),
                fmt_f64(z.re),
                fmt_f64(z.im),
            ]);
        }
    }
    t.write(path)
}

/// Row-major magnitudes as a `row,col,magnitude` CSV.
pub fn grid_csv(values: &[f64], cols: usize) -> String {
    let mut t = Table::new(["row", "col", "magnitude"]);
    for (i, v) in values.iter().enumerate() {
        t.push(vec![
            (i / cols).to_string(),
            (i % cols).to_string(),
            fmt_f64(*v),
        ]);
    }
    t.to_csv()
}

/// Plain (ASCII) portable graymap, scaled so the largest value maps to `max_gray`.
pub fn graymap_p2(values: &[f64], rows: usize, cols: usize, max_gray: u16) -> String {
    let peak = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "P2\n{cols} {rows}\n{max_gray}");
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| {
                let v = values[r * cols + c];
                let g = if peak > 0.0 && v.is_finite() {
                    (v / peak * max_gray as f64)
                        .round()
                        .clamp(0.0, max_gray as f64) as u16
                } else {
                    0
                };
                g.to_string()
            })
            .collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}
