use serde::{Deserialize, Serialize};

use crate::duhamel::collocation::{Collocation, Dealiasing, StageValues};
use crate::duhamel::schedule::StepSchedule;
use crate::duhamel::trajectory::{Provenance, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::semigroup::LinearKernel;
use crate::spectral::bracket;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::FrequencyGrid;

/// Which snapshots a solve keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotPolicy {
    #[default]
    All,
    /// Initial and final snapshots only.
    Endpoints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Local existence time; the solution lives on `[0, horizon]`.
    pub horizon: f64,
    /// Gauss stages per step: 1 (order 2) or 2 (order 4).
    pub stages: usize,
    pub max_iterations: usize,
    /// Relative successive difference at which the iteration stops.
    pub tolerance: f64,
    /// Largest successive-difference ratio accepted as contraction.
    pub contraction_tolerance: f64,
    /// Weight of the smoother branch in the `Z_beta` norm.
    pub beta: f64,
    pub dealiasing: Dealiasing,
    pub schedule: StepSchedule,
    pub kernel: LinearKernel,
    pub snapshots: SnapshotPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: 0.5,
            stages: 2,
            max_iterations: 60,
            tolerance: 1e-12,
            contraction_tolerance: 0.5,
            beta: 1.0,
            dealiasing: Dealiasing::ThreeHalves,
            schedule: StepSchedule::default(),
            kernel: LinearKernel::KdvBurgers,
            snapshots: SnapshotPolicy::All,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: format!("solver.{key}"), message });
        if !(self.horizon > 0.0 && self.horizon <= 1.0) {
            return bad("horizon", format!("must lie in (0, 1], got {}", self.horizon));
        }
        if !(self.beta >= 1.0) {
            return bad("beta", format!("must be >= 1, got {}", self.beta));
        }
        if !(self.stages == 1 || self.stages == 2) {
            return bad("stages", format!("must be 1 or 2, got {}", self.stages));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be positive".into());
        }
        if !(self.tolerance > 0.0) || !(self.contraction_tolerance > 0.0) {
            return bad("tolerance", "tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self { horizon, ..self.clone() }
    }

    pub(crate) fn integrator<T: Real>(&self, grid: FrequencyGrid<T>, length: f64) -> Result<Collocation<T>> {
        let steps = self.schedule.step_sizes(T::lit(length))?;
        Collocation::new(grid, self.kernel, self.stages, steps)
    }
}

/// One Picard iteration of the fixed-point map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `sup_t ||u^{k} - u^{k-1}||_{H^-1}`.
    pub diff_norm: f64,
    /// `diff_norm` over the previous one; absent for the first iteration.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution<T: Real> {
    pub trajectory: Trajectory<T>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl<T: Real> Solution<T> {
    /// Largest ratio from the second iteration on.
    pub fn max_ratio(&self) -> Option<f64> {
        self.history.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }
}

pub(crate) fn hm1_norm<T: Real>(grid: &FrequencyGrid<T>, c: &[Cplx<T>]) -> T {
    let s = c.iter().enumerate().fold(T::zero(), |a, (k, v)| {
        let w = bracket(grid.xi(k));
        a + v.norm_sqr() / (w * w)
    });
    (s * grid.measure()).sqrt()
}

fn sup_diff<T: Real>(grid: &FrequencyGrid<T>, a: &StageValues<T>, b: &StageValues<T>) -> (T, T) {
    let mut diff = T::zero();
    let mut size = T::zero();
    for (x, y) in a.ends.iter().zip(&b.ends).chain(a.stages.iter().zip(&b.stages)) {
        let d: Vec<Cplx<T>> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        diff = diff.max(hm1_norm(grid, &d));
        size = size.max(hm1_norm(grid, x));
    }
    (diff, size)
}

pub(crate) fn to_trajectory<T: Real>(
    col: &Collocation<T>,
    values: StageValues<T>,
    real: bool,
    policy: SnapshotPolicy,
    t0: T,
    provenance: Provenance,
) -> Result<Trajectory<T>> {
    let grid = *col.grid();
    let times = col.times();
    let last = times.len() - 1;
    let keep: Vec<usize> = match policy {
        SnapshotPolicy::All => (0..=last).collect(),
        SnapshotPolicy::Endpoints => vec![0, last],
    };
    let mut ends: Vec<Option<Vec<Cplx<T>>>> = values.ends.into_iter().map(Some).collect();
    let snaps = keep
        .iter()
        .map(|&i| SpectralField::from_coeffs(grid, ends[i].take().unwrap(), real))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(keep.iter().map(|&i| t0 + times[i]).collect(), snaps, provenance)
}

/// Fixed point of the discrete Duhamel map on `[0, cfg.horizon]` by global Picard iteration.
///
/// Iterates `u^{k+1} = S(t) u0 - 1/2 D[d/dx (u^k)^2]` on the whole step sequence. Stops
/// once the relative successive difference falls below `cfg.tolerance`; fails with
/// [`Error::Divergence`] after three consecutive non-contracting iterations.
pub fn solve<T: Real>(u0: &SpectralField<T>, cfg: &SolverConfig) -> Result<Solution<T>> {
    cfg.validate()?;
    let col = cfg.integrator(*u0.grid(), cfg.horizon)?;
    solve_with(&col, u0, cfg, T::zero())
}

pub(crate) fn solve_with<T: Real>(col: &Collocation<T>, u0: &SpectralField<T>, cfg: &SolverConfig, t0: T) -> Result<Solution<T>> {
    let grid = *u0.grid();
    let mut current = col.linear(u0.coeffs());
    let mut history = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut bad_streak = 0;
    let mut converged = false;
    for iter in 1..=cfg.max_iterations {
        let forcing = col.nonlinearity(&current);
        let next = col.sweep(Some(u0.coeffs()), &forcing);
        let (diff, size) = sup_diff(&grid, &next, &current);
        let diff = diff.to_f64_lossy();
        let ratio = prev_diff.filter(|&p| p > 0.0).map(|p| diff / p);
        history.push(IterationRecord { iter, diff_norm: diff, ratio });
        current = next;
        if diff <= cfg.tolerance * size.to_f64_lossy() || diff == 0.0 {
            converged = ratio.is_none_or(|r| r <= cfg.contraction_tolerance) || diff == 0.0;
            break;
        }
        match ratio {
            Some(r) if r >= 1.0 => {
                bad_streak += 1;
                if bad_streak >= 3 {
                    return Err(Error::Divergence { iterations: iter, ratio: r });
                }
            }
            _ => bad_streak = 0,
        }
        prev_diff = Some(diff);
    }
    let trajectory = to_trajectory(col, current, u0.is_real(), cfg.snapshots, t0, Provenance::Converged)?;
    Ok(Solution { trajectory, history, converged })
}

/// Result of [`continue_globally`].
#[derive(Clone, Debug)]
pub struct GlobalSolution<T: Real> {
    pub trajectory: Trajectory<T>,
    pub restarts: Vec<RestartRecord>,
    pub converged: bool,
}

/// Diagnostics at a restart of the local solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub time: f64,
    pub l2_norm: f64,
    /// Fraction of `L^2` mass above half the Nyquist frequency.
    pub tail_fraction: f64,
    pub iterations: usize,
}

pub const DECAY_CERTIFICATE: f64 = 1e-8;

fn tail_fraction<T: Real>(u: &SpectralField<T>) -> f64 {
    let cut = u.grid().nyquist() * T::lit(0.5);
    let total = u.l2_norm();
    if total == T::zero() {
        return 0.0;
    }
    let tail = u.weighted_l2(|xi| if xi.abs() > cut { T::one() } else { T::zero() });
    (tail * tail / (total * total)).to_f64_lossy()
}

/// Chains local solves of length `cfg.horizon` up to `t_end`. Every restart datum is
/// checked for spectral decay; its `L^2` norm is recorded.
pub fn continue_globally<T: Real>(u0: &SpectralField<T>, t_end: f64, cfg: &SolverConfig) -> Result<GlobalSolution<T>> {
    cfg.validate()?;
    if !(t_end > cfg.horizon) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must exceed the local horizon {}", cfg.horizon)));
    }
    let mut times = Vec::new();
    let mut snaps = Vec::new();
    let mut restarts = Vec::new();
    let mut datum = u0.clone();
    let mut t = 0.0;
    let mut converged = true;
    let local = SolverConfig { snapshots: SnapshotPolicy::All, ..cfg.clone() };
    while t < t_end * (1.0 - 1e-12) {
        let len = cfg.horizon.min(t_end - t);
        let col = local.integrator(*u0.grid(), len)?;
        let sol = solve_with(&col, &datum, &local, T::lit(t))?;
        converged &= sol.converged;
        let traj = sol.trajectory;
        let skip = usize::from(!times.is_empty());
        let keep_all = cfg.snapshots == SnapshotPolicy::All;
        for (i, (&ti, s)) in traj.times().iter().zip(traj.snapshots()).enumerate().skip(skip) {
            if keep_all || (times.is_empty() && i == 0) {
                times.push(ti);
                snaps.push(s.clone());
            }
        }
        t += len;
        datum = traj.last().clone();
        let tail = tail_fraction(&datum);
        restarts.push(RestartRecord {
            time: t,
            l2_norm: datum.l2_norm().to_f64_lossy(),
            tail_fraction: tail,
            iterations: sol.history.len(),
        });
        if tail > DECAY_CERTIFICATE {
            return Err(Error::DecayCertificate { t, tail });
        }
    }
    if cfg.snapshots == SnapshotPolicy::Endpoints {
        times.push(T::lit(t));
        snaps.push(datum);
    }
    Ok(GlobalSolution { trajectory: Trajectory::new(times, snaps, Provenance::Converged)?, restarts, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: FrequencyGrid<f64>, amp: f64) -> SpectralField<f64> {
        let xs = grid.points();
        let u: Vec<f64> = xs.iter().map(|x| amp * (-x * x / 4.0).exp()).collect();
        SpectralField::from_physical(grid, &u).unwrap()
    }

    fn grid() -> FrequencyGrid<f64> {
        FrequencyGrid::new(8.0 * std::f64::consts::PI, 128).unwrap()
    }

    #[test]
    fn zero_datum_stays_zero() {
        let u0 = SpectralField::zeros(grid());
        let sol = solve(&u0, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.trajectory.snapshots().iter().all(|s| s.l2_norm() == 0.0));
    }

    #[test]
    fn l2_norm_decays_with_dissipation() {
        let u0 = gaussian(grid(), 1.0);
        let sol = solve(&u0, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        let norms: Vec<f64> = sol.trajectory.snapshots().iter().map(|s| s.l2_norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        // ||u(t)||^2 + 2 int_0^t ||u_x||^2 = ||u0||^2
        let traj = &sol.trajectory;
        let grad: Vec<f64> = traj.snapshots().iter().map(|s| s.derivative().l2_norm().powi(2)).collect();
        let dissipated: f64 = traj.times().windows(2).zip(grad.windows(2)).map(|(t, g)| (t[1] - t[0]) * (g[0] + g[1])).sum();
        let balance = norms.last().unwrap().powi(2) + dissipated;
        assert!((balance - norms[0].powi(2)).abs() < 1e-4 * norms[0].powi(2), "balance {balance} vs {}", norms[0].powi(2));
    }

    #[test]
    fn l2_norm_is_conserved_without_dissipation() {
        let u0 = gaussian(grid(), 1.0);
        let cfg = SolverConfig { kernel: LinearKernel::Kdv, ..SolverConfig::default() };
        let sol = solve(&u0, &cfg).unwrap();
        let n0 = u0.l2_norm();
        for s in sol.trajectory.snapshots() {
            assert!((s.l2_norm() - n0).abs() < 1e-8 * n0);
        }
    }

    #[test]
    fn fourth_order_in_the_step() {
        let u0 = gaussian(grid(), 1.0);
        let run = |steps| {
            let cfg = SolverConfig { schedule: StepSchedule::Uniform { steps }, snapshots: SnapshotPolicy::Endpoints, ..Default::default() };
            solve(&u0, &cfg).unwrap().trajectory.last().clone()
        };
        let (a, b, c) = (run(25), run(50), run(100));
        let e1 = a.sub(&c).unwrap().l2_norm();
        let e2 = b.sub(&c).unwrap().l2_norm();
        let order = (e1 / e2 - 1.0).log2() + 1.0;
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn chaining_matches_single_solve() {
        let u0 = gaussian(grid(), 1.0);
        let cfg = SolverConfig { schedule: StepSchedule::Uniform { steps: 100 }, ..Default::default() };
        let whole = solve(&u0, &cfg).unwrap().trajectory.last().clone();
        let short = SolverConfig { horizon: 0.25, schedule: StepSchedule::Uniform { steps: 50 }, ..Default::default() };
        let chained = continue_globally(&u0, 0.5, &short).unwrap();
        assert_eq!(chained.restarts.len(), 2);
        let diff = chained.trajectory.last().sub(&whole).unwrap().l2_norm();
        assert!(diff < 1e-10 * whole.l2_norm(), "diff {diff}");
        assert!((chained.trajectory.end() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn large_data_diverge() {
        let u0 = gaussian(grid(), 200.0);
        let cfg = SolverConfig { horizon: 1.0, ..Default::default() };
        assert!(matches!(solve(&u0, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn invalid_config_names_the_key() {
        let cfg = SolverConfig { horizon: 2.0, ..Default::default() };
        let err = solve(&gaussian(grid(), 1.0), &cfg).unwrap_err();
        assert!(err.to_string().contains("solver.horizon"));
    }
}
