//! Text format for spectral fields: a header line with the grid, then one `xi,re,im` row
//! per mode in FFT order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Cplx;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::FrequencyGrid;

const MAGIC: &str = "# kdvb-field v1";
const HEADER: &str = "half_length,n_modes,horizon,n_steps,real";

pub fn field_to_csv(u: &SpectralField<f64>) -> String {
    let g = u.grid();
    let mut out = format!("{MAGIC}\n{HEADER}\n{:.17e},{},0,0,{}\nxi,re,im\n", g.half_length(), g.n_modes(), u.is_real());
    for (k, c) in u.coeffs().iter().enumerate() {
        writeln!(out, "{:.17e},{:.17e},{:.17e}", g.xi(k), c.re, c.im).unwrap();
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<SpectralField<f64>> {
    let bad = |m: String| Error::Format(m);
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad(format!("first line must be `{MAGIC}`")));
    }
    if lines.next() != Some(HEADER) {
        return Err(bad(format!("second line must be `{HEADER}`")));
    }
    let meta: Vec<&str> = lines.next().ok_or_else(|| bad("missing grid line".into()))?.split(',').collect();
    if meta.len() != 5 {
        return Err(bad("grid line needs five columns".into()));
    }
    let half_length: f64 = meta[0].trim().parse().map_err(|_| bad(format!("bad half_length `{}`", meta[0])))?;
    let n_modes: usize = meta[1].trim().parse().map_err(|_| bad(format!("bad n_modes `{}`", meta[1])))?;
    let real: bool = meta[4].trim().parse().map_err(|_| bad(format!("bad realness flag `{}`", meta[4])))?;
    if lines.next() != Some("xi,re,im") {
        return Err(bad("missing coefficient header `xi,re,im`".into()));
    }
    let grid = FrequencyGrid::new(half_length, n_modes)?;
    let mut coeffs = Vec::with_capacity(n_modes);
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("bad number in coefficient row {row}")))?;
        if cols.len() != 3 {
            return Err(bad(format!("coefficient row {row} needs three columns")));
        }
        if row < n_modes && (cols[0] - grid.xi(row)).abs() > 1e-9 * (1.0 + grid.nyquist()) {
            return Err(bad(format!("row {row} has xi = {} but the grid expects {}", cols[0], grid.xi(row))));
        }
        coeffs.push(Cplx::new(cols[1], cols[2]));
    }
    let u = SpectralField::from_coeffs(grid, coeffs, real)?;
    if real && u.hermitian_defect() > 1e-12 * u.l2_norm() {
        return Err(bad(format!("field is flagged real but its Hermitian defect is {:.3e}", u.hermitian_defect())));
    }
    Ok(u)
}

pub fn read_field(path: &Path) -> Result<SpectralField<f64>> {
    field_from_csv(&std::fs::read_to_string(path)?)
}
