use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel::picard::picard_coefficients;
use crate::duhamel::schedule::StepSchedule;
use crate::duhamel::solver::{solve, SnapshotPolicy, SolverConfig};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::illposed::counterexample::{make_phi_n, AmplitudeConvention};
use crate::norms::sobolev::sobolev_norm;
use crate::spectral::dyadic::DyadicIndex;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::FrequencyGrid;

pub const MIN_RESIDUAL_ORDER: f64 = 2.8;
/// `||u(t, eps phi_N)||_{H^s}` must stay above this multiple of `C0 eps^2`.
pub const LOWER_FRACTION: f64 = 0.4;
/// Required drop of `||phi_N||_{H^s}` from the first to the last block.
pub const DATA_DROP: f64 = 4.0;
const MAX_BACKOFF: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscontinuityConfig {
    pub n_modes: usize,
    pub half_length: f64,
    pub s: f64,
    pub t: f64,
    pub blocks: Vec<i32>,
    /// Data scales, decreasing. Halved together until the solver contracts at the largest.
    pub eps: Vec<f64>,
    /// Picard coefficients kept for the tail estimate.
    pub k_max: usize,
    pub convention: AmplitudeConvention,
    /// Largest step of the graded schedule.
    pub max_step: f64,
}

impl Default for DiscontinuityConfig {
    fn default() -> Self {
        Self {
            n_modes: 4096,
            half_length: 8.0 * std::f64::consts::PI,
            s: -2.0,
            t: 0.5,
            blocks: vec![4, 5, 6, 7],
            eps: vec![0.05, 0.025, 0.0125],
            k_max: 6,
            convention: AmplitudeConvention::Corrected,
            max_step: 5e-3,
        }
    }
}

impl DiscontinuityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: format!("discontinuity.{key}"), message });
        if !(self.s < -1.0) {
            return bad("s", format!("must be below -1, got {}", self.s));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return bad("t", format!("must lie in (0, 1), got {}", self.t));
        }
        if self.blocks.is_empty() || self.blocks.windows(2).any(|w| w[1] <= w[0]) {
            return bad("blocks", "must be nonempty and strictly increasing".into());
        }
        if self.eps.len() < 2 || self.eps.iter().any(|&e| !(e > 0.0)) || self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps", "need at least two positive, strictly decreasing scales".into());
        }
        if self.k_max < 3 {
            return bad("k_max", format!("must be at least 3, got {}", self.k_max));
        }
        if !(self.max_step > 0.0) {
            return bad("max_step", "must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<FrequencyGrid<f64>> {
        FrequencyGrid::new(self.half_length, self.n_modes)
    }

    pub fn solver(&self, grid: &FrequencyGrid<f64>) -> SolverConfig {
        SolverConfig {
            horizon: self.t,
            schedule: StepSchedule::graded_for(grid.nyquist(), self.max_step),
            snapshots: SnapshotPolicy::Endpoints,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub eps: f64,
    /// `||u(t, eps phi_N)||_{H^s}`.
    pub u_norm: f64,
    /// `||eps S(t) phi_N||_{H^s}`.
    pub linear_norm: f64,
    /// `||eps^2 A_2||_{H^s}`.
    pub quadratic_norm: f64,
    /// `||u - eps S(t) phi_N - eps^2 A_2||_{H^s}`.
    pub residual: f64,
    /// `sum_{k >= 3} eps^k ||A_k||_{H^-1}` with geometric extrapolation beyond `k_max`.
    pub tail_bound: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub n: f64,
    /// `||phi_N||_{H^s}`.
    pub data_norm: f64,
    /// `||A_2(t, phi_N, phi_N)||_{H^s}`.
    pub a2_norm: f64,
    pub scales: Vec<ScaleRow>,
    /// Fitted exponent of the residual against `eps`.
    pub residual_order: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityReport {
    pub s: f64,
    pub t: f64,
    /// Scales actually used after back-off.
    pub eps: Vec<f64>,
    pub rows: Vec<FlowRow>,
    /// `min_N ||A_2(t, phi_N, phi_N)||_{H^s}`.
    pub c0_hat: f64,
    /// `max residual / eps^3`.
    pub c_cubic: f64,
    pub min_order: f64,
    /// `min u_norm / (c0_hat eps^2)` over blocks and scales.
    pub min_lower_ratio: f64,
    /// `data_norm` at the first block over the last.
    pub data_drop: f64,
    pub order_ok: bool,
    pub lower_ok: bool,
    pub drop_ok: bool,
}

impl DiscontinuityReport {
    pub fn pass(&self) -> bool {
        self.order_ok && self.lower_ok && self.drop_ok
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,eps,data_norm,a2_norm,u_norm,linear_norm,quadratic_norm,residual,tail_bound\n");
        for r in &self.rows {
            for e in &r.scales {
                out.push_str(&format!(
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    r.n, e.eps, r.data_norm, r.a2_norm, e.u_norm, e.linear_norm, e.quadratic_norm, e.residual, e.tail_bound
                ));
            }
        }
        out
    }
}

/// Flow-map measurements for one datum `phi` over the scales `eps`.
pub fn flow_row(phi: &SpectralField<f64>, n: f64, s: f64, eps: &[f64], k_max: usize, solver: &SolverConfig) -> Result<FlowRow> {
    let series = picard_coefficients(phi, k_max, solver)?;
    let linear = series.coefficient(1).last().clone();
    let a2 = series.coefficient(2).last().clone();
    let mut scales = Vec::with_capacity(eps.len());
    for &e in eps {
        let sol = solve(&phi.scale(e), solver)?;
        if !sol.converged {
            return Err(Error::Divergence { iterations: sol.history.len(), ratio: sol.max_ratio().unwrap_or(f64::NAN) });
        }
        let u = sol.trajectory.last();
        let lin = linear.scale(e);
        let quad = a2.scale(e * e);
        let rest = u.sub(&lin)?.sub(&quad)?;
        scales.push(ScaleRow {
            eps: e,
            u_norm: sobolev_norm(u, s),
            linear_norm: sobolev_norm(&lin, s),
            quadratic_norm: sobolev_norm(&quad, s),
            residual: sobolev_norm(&rest, s),
            tail_bound: series.tail_bound(e)?,
            iterations: sol.history.len(),
        });
    }
    let xs: Vec<f64> = scales.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = scales.iter().map(|r| r.residual).collect();
    let residual_order = if ys.iter().all(|&y| y > 0.0) { loglog_slope(&xs, &ys) } else { f64::NAN };
    Ok(FlowRow { n, data_norm: sobolev_norm(phi, s), a2_norm: sobolev_norm(&a2, s), scales, residual_order })
}

/// Largest `eps` of the list, halved until the solver contracts on every datum.
fn back_off(data: &[SpectralField<f64>], eps: &[f64], solver: &SolverConfig) -> Result<Vec<f64>> {
    let mut scale = 1.0;
    for _ in 0..=MAX_BACKOFF {
        let top = eps[0] * scale;
        let ok = data.par_iter().map(|phi| match solve(&phi.scale(top), solver) {
            Ok(sol) => Ok(sol.converged),
            Err(Error::Divergence { .. }) => Ok(false),
            Err(e) => Err(e),
        });
        if ok.collect::<Result<Vec<bool>>>()?.into_iter().all(|b| b) {
            return Ok(eps.iter().map(|e| e * scale).collect());
        }
        scale *= 0.5;
    }
    Err(Error::Divergence { iterations: solver.max_iterations, ratio: f64::NAN })
}

/// `u(t, eps phi_N)` against its quadratic approximation `eps S(t) phi_N + eps^2 A_2`.
pub fn flow_discontinuity_experiment(cfg: &DiscontinuityConfig) -> Result<DiscontinuityReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let solver = cfg.solver(&grid);
    let data = cfg
        .blocks
        .iter()
        .map(|&e| make_phi_n(grid, DyadicIndex(e), cfg.convention))
        .collect::<Result<Vec<_>>>()?;
    let eps = back_off(&data, &cfg.eps, &solver)?;
    let rows = data
        .par_iter()
        .zip(&cfg.blocks)
        .map(|(phi, &e)| flow_row(phi, DyadicIndex(e).value_f64(), cfg.s, &eps, cfg.k_max, &solver))
        .collect::<Result<Vec<_>>>()?;
    let c0_hat = rows.iter().map(|r| r.a2_norm).fold(f64::INFINITY, f64::min);
    let c_cubic = rows.iter().flat_map(|r| r.scales.iter().map(|x| x.residual / x.eps.powi(3))).fold(0.0, f64::max);
    let min_order = rows.iter().map(|r| r.residual_order).fold(f64::INFINITY, f64::min);
    let min_lower_ratio = rows
        .iter()
        .flat_map(|r| r.scales.iter().map(|x| x.u_norm / (c0_hat * x.eps * x.eps)))
        .fold(f64::INFINITY, f64::min);
    let data_drop = rows[0].data_norm / rows[rows.len() - 1].data_norm;
    Ok(DiscontinuityReport {
        s: cfg.s,
        t: cfg.t,
        eps,
        c0_hat,
        c_cubic,
        min_order,
        min_lower_ratio,
        data_drop,
        order_ok: min_order >= MIN_RESIDUAL_ORDER,
        lower_ok: min_lower_ratio >= LOWER_FRACTION,
        drop_ok: data_drop >= DATA_DROP,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DiscontinuityConfig {
        DiscontinuityConfig { n_modes: 1024, half_length: 8.0 * std::f64::consts::PI, blocks: vec![3, 4], k_max: 4, ..Default::default() }
    }

    #[test]
    fn zero_datum_gives_zero_columns() {
        let cfg = small();
        let grid = cfg.grid().unwrap();
        let row = flow_row(&SpectralField::zeros(grid), 8.0, cfg.s, &cfg.eps, 3, &cfg.solver(&grid)).unwrap();
        for e in &row.scales {
            assert_eq!((e.u_norm, e.linear_norm, e.quadratic_norm, e.residual), (0.0, 0.0, 0.0, 0.0));
        }
        assert_eq!(row.a2_norm, 0.0);
    }

    #[test]
    fn small_grid_shows_the_quadratic_regime() {
        let rep = flow_discontinuity_experiment(&small()).unwrap();
        assert_eq!(rep.eps, small().eps);
        for r in &rep.rows {
            assert!(r.residual_order >= MIN_RESIDUAL_ORDER, "{r:?}");
            for e in &r.scales {
                // S(t) is an H^s contraction
                assert!(e.linear_norm <= e.eps * r.data_norm * (1.0 + 1e-12));
                assert!(e.residual < e.quadratic_norm);
            }
        }
        assert!(rep.lower_ok);
    }

    #[test]
    fn linear_part_decays_with_the_data() {
        let rep = flow_discontinuity_experiment(&small()).unwrap();
        // int_N^{N+2} <xi>^{-4} dxi in closed form, trapezoid endpoints aside
        let antiderivative = |x: f64| x / (2.0 * (1.0 + x * x)) + 0.5 * x.atan();
        let oracle = |n: f64| (2.0 * n * n * (antiderivative(n + 2.0) - antiderivative(n)) / std::f64::consts::TAU).sqrt();
        for r in &rep.rows {
            assert!((r.data_norm / oracle(r.n) - 1.0).abs() < 1e-3, "{} {}", r.data_norm, oracle(r.n));
        }
        let (a, b) = (&rep.rows[0], &rep.rows[1]);
        assert!(b.scales[0].linear_norm < a.scales[0].linear_norm);
    }

    #[test]
    fn config_errors_name_the_key() {
        let cfg = DiscontinuityConfig { eps: vec![0.01, 0.02], ..small() };
        match flow_discontinuity_experiment(&cfg) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "discontinuity.eps"),
            other => panic!("{other:?}"),
        }
    }
}
