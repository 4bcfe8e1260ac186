//! CSV persistence: fields as `x,value`, spectra as `n,re,im`, and
//! diffeomorphisms as `x,phi` (lift values). Numbers are written with 17
//! significant digits and LF line endings so byte-identical reruns are
//! possible.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::diffeo::Diffeo;
use crate::spectral::Field;
use crate::{Error, Result};

/// Full round-trip precision: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn field_to_csv(f: &Field) -> String {
    let mut out = String::from("x,value\n");
    for (x, v) in f.grid().zip(f.values()) {
        let _ = writeln!(out, "{},{}", fmt_f64(x), fmt_f64(*v));
    }
    out
}

pub fn spectrum_to_csv(f: &Field) -> String {
    let n = f.len();
    let spec = f.spectrum();
    let mut out = String::from("n,re,im\n");
    // Ascending wavenumber order, -N/2 + 1 ..= N/2.
    for k in (-(n as i64) / 2 + 1)..=(n as i64 / 2) {
        let bin = k.rem_euclid(n as i64) as usize;
        let c = spec[bin];
        let _ = writeln!(out, "{},{},{}", k, fmt_f64(c.re), fmt_f64(c.im));
    }
    out
}

pub fn diffeo_to_csv(phi: &Diffeo) -> String {
    let mut out = String::from("x,phi\n");
    let lift = phi.lift();
    for (x, p) in phi.displacement().grid().zip(&lift) {
        let _ = writeln!(out, "{},{}", fmt_f64(x), fmt_f64(*p));
    }
    out
}

pub fn write_field_csv(path: &Path, f: &Field) -> Result<()> {
    std::fs::write(path, field_to_csv(f))?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, f: &Field) -> Result<()> {
    std::fs::write(path, spectrum_to_csv(f))?;
    Ok(())
}

pub fn write_diffeo_csv(path: &Path, phi: &Diffeo) -> Result<()> {
    std::fs::write(path, diffeo_to_csv(phi))?;
    Ok(())
}

fn parse_rows(text: &str, header: &str, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty csv".into()))?;
    if first.trim() != header {
        return Err(Error::Parse(format!(
            "expected header '{header}', found '{first}'"
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse(format!(
                "line {}: expected {cols} columns, found {}",
                idx + 2,
                fields.len()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(parsed.map_err(|e| Error::Parse(format!("line {}: {e}", idx + 2)))?);
    }
    Ok(rows)
}

pub fn field_from_csv(text: &str) -> Result<Field> {
    let rows = parse_rows(text, "x,value", 2)?;
    Field::from_values(rows.iter().map(|r| r[1]).collect())
}

pub fn read_field_csv(path: &Path) -> Result<Field> {
    field_from_csv(&std::fs::read_to_string(path)?)
}

pub fn spectrum_from_csv(text: &str) -> Result<Field> {
    let rows = parse_rows(text, "n,re,im", 3)?;
    let n = rows.len();
    if n < 2 {
        return Err(Error::Parse("spectrum csv too short".into()));
    }
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for r in &rows {
        let k = r[0].round() as i64;
        if k < -(n as i64) / 2 + 1 || k > n as i64 / 2 {
            return Err(Error::Parse(format!("wavenumber {k} outside band for N = {n}")));
        }
        spec[k.rem_euclid(n as i64) as usize] = Complex64::new(r[1], r[2]);
    }
    Field::from_spectrum(spec)
}

/// Read a diffeomorphism from `x,phi` lift values, re-deriving the
/// displacement and re-validating all invariants.
pub fn diffeo_from_csv(text: &str, slope_floor: f64) -> Result<Diffeo> {
    let rows = parse_rows(text, "x,phi", 2)?;
    let n = rows.len();
    let disp: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r[1] - i as f64 / n as f64)
        .collect();
    Diffeo::from_displacement(Field::from_values(disp)?, slope_floor)
}

pub fn read_diffeo_csv(path: &Path, slope_floor: f64) -> Result<Diffeo> {
    diffeo_from_csv(&std::fs::read_to_string(path)?, slope_floor)
}
