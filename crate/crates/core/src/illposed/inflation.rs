use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel::explicit::a2_explicit;
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::illposed::counterexample::{make_phi_n, AmplitudeConvention, OBSERVATION_BAND};
use crate::norms::sobolev::{sobolev_norm, sobolev_norm_band};
use crate::spectral::dyadic::DyadicIndex;
use crate::spectral::grid::FrequencyGrid;

/// Tolerance on the fitted data-decay exponent around `1 + s`.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// The band norm of `A_2` at every `N` must stay above this fraction of its first value.
pub const NONDECAY_FRACTION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationConfig {
    pub n_modes: usize,
    pub half_length: f64,
    pub s: f64,
    pub t: f64,
    /// Exponents `e` of the blocks `N = 2^e`, increasing.
    pub blocks: Vec<i32>,
    pub convention: AmplitudeConvention,
}

impl Default for InflationConfig {
    fn default() -> Self {
        Self {
            n_modes: 16384,
            half_length: 16.0 * std::f64::consts::PI,
            s: -1.25,
            t: 0.5,
            blocks: vec![4, 5, 6, 7],
            convention: AmplitudeConvention::Corrected,
        }
    }
}

impl InflationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: format!("inflation.{key}"), message });
        if !(self.s < -1.0) {
            return bad("s", format!("must be below -1, got {}", self.s));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return bad("t", format!("must lie in (0, 1), got {}", self.t));
        }
        if self.blocks.len() < 2 {
            return bad("blocks", "need at least two blocks".into());
        }
        if self.blocks.windows(2).any(|w| w[1] <= w[0]) {
            return bad("blocks", "must be strictly increasing".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<FrequencyGrid<f64>> {
        FrequencyGrid::new(self.half_length, self.n_modes)
    }

    pub fn block_values(&self) -> Vec<f64> {
        self.blocks.iter().map(|&e| DyadicIndex(e).value_f64()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationRow {
    pub n: f64,
    /// `||phi_N||_{H^s}`.
    pub data_norm: f64,
    /// `||A_2(t, phi_N, phi_N)||_{H^s}` restricted to `|xi| <= 1/2`.
    pub a2_norm_band: f64,
    pub a2_norm_full: f64,
    /// `||u(t, eps phi_N)||_{H^s}` when a flow experiment filled it in.
    pub u_norm: Option<f64>,
    /// `||u - eps S(t) phi_N - eps^2 A_2||_{H^s}` when a flow experiment filled it in.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationTable {
    pub s: f64,
    pub t: f64,
    pub rows: Vec<InflationRow>,
    /// Fitted exponent of `data_norm` against `N`.
    pub data_slope: f64,
    pub a2_band_min: f64,
    pub a2_band_first: f64,
    /// `min_N a2_norm_band^2 exp(t/4)`.
    pub lower_constant: f64,
    pub slope_ok: bool,
    pub nondecay_ok: bool,
}

impl InflationTable {
    pub fn pass(&self) -> bool {
        self.slope_ok && self.nondecay_ok
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,data_norm,a2_norm_band,a2_norm_full,u_norm,residual\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{},{}\n",
                r.n,
                r.data_norm,
                r.a2_norm_band,
                r.a2_norm_full,
                opt(r.u_norm),
                opt(r.residual)
            ));
        }
        out
    }
}

fn assemble(s: f64, t: f64, rows: Vec<InflationRow>) -> InflationTable {
    let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let data: Vec<f64> = rows.iter().map(|r| r.data_norm).collect();
    let data_slope = loglog_slope(&ns, &data);
    let a2_band_first = rows[0].a2_norm_band;
    let a2_band_min = rows.iter().map(|r| r.a2_norm_band).fold(f64::INFINITY, f64::min);
    InflationTable {
        s,
        t,
        data_slope,
        a2_band_min,
        a2_band_first,
        lower_constant: a2_band_min * a2_band_min * (t / 4.0).exp(),
        slope_ok: (data_slope - (1.0 + s)).abs() <= SLOPE_TOLERANCE,
        nondecay_ok: a2_band_min >= NONDECAY_FRACTION * a2_band_first,
        rows,
    }
}

/// Data norms against the `H^s` size of the second Picard coefficient, per block.
pub fn a2_inflation_experiment(cfg: &InflationConfig) -> Result<InflationTable> {
    cfg.validate()?;
    inflation_at(cfg, cfg.t)
}

/// [`a2_inflation_experiment`] at another observation time; `t` may be arbitrarily small.
pub fn inflation_at(cfg: &InflationConfig, t: f64) -> Result<InflationTable> {
    let grid = cfg.grid()?;
    let rows = cfg
        .blocks
        .par_iter()
        .map(|&e| {
            let phi = make_phi_n(grid, DyadicIndex(e), cfg.convention)?;
            let a2 = a2_explicit(t, &phi)?;
            Ok(InflationRow {
                n: DyadicIndex(e).value_f64(),
                data_norm: sobolev_norm(&phi, cfg.s),
                a2_norm_band: sobolev_norm_band(&a2, cfg.s, OBSERVATION_BAND),
                a2_norm_full: sobolev_norm(&a2, cfg.s),
                u_norm: None,
                residual: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(cfg.s, t, rows))
}

/// Relative change of the band column when the frequency spacing is halved (box doubled,
/// same Nyquist frequency).
pub fn quadrature_refinement(cfg: &InflationConfig) -> Result<f64> {
    let base = a2_inflation_experiment(cfg)?;
    let fine_cfg = InflationConfig { n_modes: 2 * cfg.n_modes, half_length: 2.0 * cfg.half_length, ..cfg.clone() };
    let fine = a2_inflation_experiment(&fine_cfg)?;
    Ok(base
        .rows
        .iter()
        .zip(&fine.rows)
        .map(|(a, b)| (b.a2_norm_band / a.a2_norm_band - 1.0).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_shows_inflation() {
        let tab = a2_inflation_experiment(&InflationConfig::default()).unwrap();
        assert_eq!(tab.rows.len(), 4);
        assert!(tab.rows.windows(2).all(|w| w[1].data_norm < w[0].data_norm));
        assert!(tab.rows.iter().all(|r| r.a2_norm_band > 0.0 && r.a2_norm_full >= r.a2_norm_band));
        assert!(tab.slope_ok, "{}", tab.data_slope);
        assert!(tab.nondecay_ok, "{:?}", tab.rows);
        assert!(tab.pass());
    }

    #[test]
    fn vanishes_linearly_at_time_zero() {
        // A_2(t) = -t/2 d/dx (phi_N^2) + O(t^2 N^4); the low band of phi_N^2 is O(N^2), so
        // the column is small only while t N^2 is
        let cfg = InflationConfig::default();
        let a = inflation_at(&cfg, 1e-6).unwrap();
        let b = inflation_at(&cfg, 1e-8).unwrap();
        let c = inflation_at(&cfg, 2e-8).unwrap();
        let base = a2_inflation_experiment(&cfg).unwrap();
        for (((x, y), w), z) in a.rows.iter().zip(&b.rows).zip(&c.rows).zip(&base.rows) {
            assert!((w.a2_norm_band / y.a2_norm_band - 2.0).abs() < 0.01, "{y:?} {w:?}");
            assert!(x.a2_norm_band < 0.05 * z.a2_norm_band, "{x:?} {z:?}");
        }
    }

    #[test]
    fn lower_constant_is_roughly_time_independent() {
        let cfg = InflationConfig::default();
        let c: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&t| inflation_at(&cfg, t).unwrap().lower_constant).collect();
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 2.0, "{c:?}");
    }

    #[test]
    fn stable_under_quadrature_refinement() {
        let change = quadrature_refinement(&InflationConfig::default()).unwrap();
        assert!(change < 0.01, "{change}");
    }

    #[test]
    fn literal_amplitude_collapses() {
        let cfg = InflationConfig { convention: AmplitudeConvention::Literal, ..Default::default() };
        let tab = a2_inflation_experiment(&cfg).unwrap();
        assert!(!tab.nondecay_ok);
    }

    #[test]
    fn rejects_bad_block_lists() {
        let cfg = InflationConfig { blocks: vec![5, 4], ..Default::default() };
        assert!(matches!(a2_inflation_experiment(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn csv_has_one_line_per_block() {
        let tab = a2_inflation_experiment(&InflationConfig::default()).unwrap();
        let csv = tab.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("N,data_norm,a2_norm_band,a2_norm_full,u_norm,residual"));
    }
}
