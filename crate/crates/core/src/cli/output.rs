//! CSV and JSON artifacts.
//!
//! Numbers are printed with 12 significant digits in scientific notation and `-0` is
//! folded into `0`, so equal fields give byte-identical files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::domain::SolutionField;
use crate::error::Result;

/// `v` with 12 significant digits.
pub fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

/// CSV text for one or more fields on a common grid, rows ordered by field, instant,
/// then grid index.
pub fn fields_csv(fields: &[&SolutionField]) -> String {
    let dim = fields.first().map(|f| f.grid.dim()).unwrap_or(1);
    let mut out = String::new();
    out.push_str(if dim == 2 { "t,x1,x2,u,method\n" } else { "t,x,u,method\n" });
    for f in fields {
        let points = f.grid.points();
        for (t, slice) in f.times.iter().zip(&f.values) {
            for (x, u) in points.iter().zip(slice) {
                out.push_str(&format_number(*t));
                for xk in &x[..dim] {
                    out.push(',');
                    out.push_str(&format_number(*xk));
                }
                let _ = writeln!(out, ",{},{}", format_number(*u), f.method.tag());
            }
        }
    }
    out
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn field_path(dir: &Path, tag: &str) -> PathBuf {
    dir.join(format!("field_{tag}.csv"))
}

pub fn report_path(dir: &Path, tag: &str) -> PathBuf {
    dir.join(format!("report_{tag}.json"))
}

pub fn write_fields(dir: &Path, tag: &str, fields: &[&SolutionField]) -> Result<PathBuf> {
    let p = field_path(dir, tag);
    write_atomic(&p, fields_csv(fields).as_bytes())?;
    Ok(p)
}

pub fn write_report<T: Serialize>(dir: &Path, tag: &str, report: &T) -> Result<PathBuf> {
    let p = report_path(dir, tag);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_atomic(&p, text.as_bytes())?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Method, SpaceGrid};

    #[test]
    fn twelve_significant_digits_and_no_negative_zero() {
        assert_eq!(format_number(-0.0), "0.00000000000e0");
        assert_eq!(format_number(-0.25), "-2.50000000000e-1");
        assert_eq!(format_number(1.0 / 3.0), "3.33333333333e-1");
    }

    #[test]
    fn header_follows_dimension() {
        let g = SpaceGrid::torus2(8).unwrap();
        let f = SolutionField::new(g.clone(), vec![0.0], vec![vec![1.0; g.len()]], Method::Minmax).unwrap();
        let csv = fields_csv(&[&f]);
        assert!(csv.starts_with("t,x1,x2,u,method\n"));
        assert_eq!(csv.lines().count(), 1 + 64);
        assert!(csv.lines().nth(1).unwrap().ends_with(",minmax"));
    }
}
