use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::duhamel::extended::windowed_fixed_point;
use crate::duhamel::solver::{continue_globally, solve, IterationRecord, RestartRecord};
use crate::error::{Error, Result};
use crate::illposed::{
    a2_inflation_experiment, flow_discontinuity_experiment, make_phi_n, quadrature_refinement, real_part_check, resonance_constants,
    DiscontinuityConfig, DiscontinuityReport, InflationTable,
};
use crate::illposed::counterexample::OBSERVATION_BAND;
use crate::io::config::{Command, DatumKind, FieldSource, RunConfig};
use crate::io::field_file::{field_to_csv, read_field};
use crate::io::report::{plot_data, write_outputs, Artifact, CriterionOutcome, ExperimentReport, SelfCheck};
use crate::norms::audit::{inequality_audit, RatioReport};
use crate::norms::{evaluate, sobolev_norm, NormValue};
use crate::scalar::Cplx;
use crate::semigroup::{airy_propagate, s_propagate, w_propagate};
use crate::spectral::cutoff::eta;
use crate::spectral::dyadic::DyadicIndex;
use crate::spectral::field::{frequency_range, physical_l2, SpectralField};
use crate::spectral::grid::{FrequencyGrid, TimeGrid};
use crate::spectral::spacetime::SpaceTimeField;

type Field = SpectralField<f64>;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "KDVB_THREADS";

/// Sizes the global thread pool from `KDVB_THREADS`; returns the cap when one was set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config { key: THREADS_ENV.into(), message: format!("must be a positive integer, got `{raw}`") })?;
    // a pool set up earlier in the process wins; that only happens in tests
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Band-limited random real field: independent uniform coefficients on `0 < |xi| <= max_frequency`
/// with Hermitian symmetry, real at `xi = 0`.
pub fn random_datum(grid: FrequencyGrid<f64>, max_frequency: f64, rng: &mut impl Rng) -> Field {
    let mut coeffs = vec![Cplx::new(0.0, 0.0); grid.n_modes()];
    for k in 0..grid.n_modes() {
        let m = grid.wavenumber(k);
        if m < 0 || grid.xi(k) > max_frequency || grid.xi(k).abs() >= grid.nyquist() {
            continue;
        }
        let c = Cplx::new(rng.random_range(-1.0..1.0), if m == 0 { 0.0 } else { rng.random_range(-1.0..1.0) });
        coeffs[k] = c;
        if m > 0 {
            if let Some(j) = grid.index_of(-m) {
                coeffs[j] = c.conj();
            }
        }
    }
    SpectralField::from_coeffs(grid, coeffs, true).expect("coefficients match the grid")
}

/// Initial datum of `solve`, `norm` and `grids-selfcheck`.
pub fn build_datum(cfg: &RunConfig, grid: FrequencyGrid<f64>) -> Result<Field> {
    let d = &cfg.datum;
    match d.kind {
        DatumKind::Zero => Ok(SpectralField::zeros(grid)),
        DatumKind::Gaussian => {
            let samples: Vec<f64> = grid.points().iter().map(|x| d.amplitude * (-(x / d.width).powi(2)).exp()).collect();
            SpectralField::from_physical(grid, &samples)
        }
        DatumKind::PhiN => make_phi_n(grid, DyadicIndex(d.block), d.convention).map(|f| f.scale(d.amplitude)),
        DatumKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let u = random_datum(grid, d.max_frequency, &mut rng);
            let size = sobolev_norm(&u, -1.0);
            Ok(if size > 0.0 { u.scale(d.amplitude / size) } else { u })
        }
        DatumKind::File => {
            let u = read_field(&d.path)?;
            if u.grid() != &grid {
                return Err(Error::Config {
                    key: "datum.path".into(),
                    message: format!(
                        "field grid ({} modes, half-length {}) differs from the configured grid",
                        u.grid().n_modes(),
                        u.grid().half_length()
                    ),
                });
            }
            Ok(u)
        }
    }
}

/// Data defined on the line, so a doubled box carries the same function.
fn localized(cfg: &RunConfig) -> bool {
    !matches!(cfg.datum.kind, DatumKind::File | DatumKind::Random)
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn max_change(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    pairs.into_iter().map(|(a, b)| relative_change(a, b)).fold(0.0, f64::max)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// Sizes of one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnapshotNorms {
    pub t: f64,
    pub l2: f64,
    pub hm1: f64,
    pub h10: f64,
}

fn snapshot_norms(t: f64, u: &Field) -> SnapshotNorms {
    SnapshotNorms { t, l2: u.l2_norm(), hm1: sobolev_norm(u, -1.0), h10: sobolev_norm(u, 10.0) }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub t_end: f64,
    pub converged: bool,
    /// Successive-difference history of a single local solve.
    pub history: Vec<IterationRecord>,
    pub max_ratio: Option<f64>,
    /// Restart diagnostics when the solve ran past the local horizon.
    pub restarts: Vec<RestartRecord>,
    pub norms: Vec<SnapshotNorms>,
    /// `| ||u(T)||^2 + 2 int ||u_x||^2 - ||u0||^2 | / ||u0||^2` by the trapezoid rule.
    pub energy_defect: f64,
    #[serde(skip)]
    pub last: Option<Field>,
}

pub fn integrate(u0: &Field, cfg: &RunConfig) -> Result<SolveSummary> {
    let t_end = cfg.solve.t_end;
    let (traj, history, restarts, converged) = if t_end <= cfg.solver.horizon {
        let sol = solve(u0, &cfg.solver.with_horizon(t_end))?;
        (sol.trajectory, sol.history, Vec::new(), sol.converged)
    } else {
        let sol = continue_globally(u0, t_end, &cfg.solver)?;
        (sol.trajectory, Vec::new(), sol.restarts, sol.converged)
    };
    let norms: Vec<SnapshotNorms> = traj.times().iter().zip(traj.snapshots()).map(|(&t, u)| snapshot_norms(t, u)).collect();
    let grad: Vec<f64> = traj.snapshots().iter().map(|u| u.derivative().l2_norm().powi(2)).collect();
    let dissipated: f64 = traj.times().windows(2).zip(grad.windows(2)).map(|(t, g)| (t[1] - t[0]) * (g[0] + g[1])).sum();
    let start = norms[0].l2.powi(2);
    let balance = norms.last().unwrap().l2.powi(2) + dissipated;
    let energy_defect = if start > 0.0 { (balance - start).abs() / start } else { 0.0 };
    let max_ratio = history.iter().filter_map(|r| r.ratio).reduce(f64::max);
    Ok(SolveSummary { t_end, converged, history, max_ratio, restarts, norms, energy_defect, last: Some(traj.last().clone()) })
}

/// Output of one command before it is written.
pub struct RunOutput {
    pub report: ExperimentReport,
    pub artifacts: Vec<Artifact>,
}

/// Dispatches the configured command.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.command {
        Command::Solve => run_solve(cfg),
        Command::A2Experiment => run_inflation(cfg),
        Command::Discontinuity => run_discontinuity(cfg),
        Command::Norm => run_norm(cfg),
        Command::Audit => run_audit(cfg),
        Command::GridsSelfcheck => run_grids_selfcheck(cfg),
    }
}

/// [`run`] followed by writing every output into `cfg.output.dir`.
pub fn run_and_write(cfg: &RunConfig) -> Result<ExperimentReport> {
    let out = run(cfg)?;
    write_outputs(&cfg.output.dir, &out.report, &out.artifacts)?;
    Ok(out.report)
}

/// Final-time norms on the configured box and on the doubled box.
fn box_doubling(cfg: &RunConfig, summary: &SolveSummary) -> Result<Option<SelfCheck>> {
    if !cfg.output.selfcheck || !localized(cfg) {
        return Ok(None);
    }
    let grid = cfg.grid.build()?.doubled_box();
    let fine = integrate(&build_datum(cfg, grid)?, cfg)?;
    let (a, b) = (summary.norms.last().unwrap(), fine.norms.last().unwrap());
    let change = max_change([(a.l2, b.l2), (a.hm1, b.hm1)]);
    Ok(Some(SelfCheck::new("solve: final L2 and H^-1 norms, box doubled", change, cfg.output.selfcheck_tolerance)))
}

fn run_solve(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = cfg.grid.build()?;
    let u0 = build_datum(cfg, grid)?;
    let summary = integrate(&u0, cfg)?;
    let contraction = summary.max_ratio.is_none_or(|r| r <= cfg.solver.contraction_tolerance);
    let criteria = vec![CriterionOutcome::new(
        "picard-contraction",
        summary.converged && contraction,
        format!(
            "converged = {}, largest successive-difference ratio {} (limit {})",
            summary.converged,
            summary.max_ratio.map_or("n/a".into(), |r| format!("{r:.3e}")),
            cfg.solver.contraction_tolerance
        ),
    )];
    let selfchecks = box_doubling(cfg, &summary)?.into_iter().collect();
    let last = summary.last.as_ref().expect("integrate keeps the final state");
    let mut csv = String::from("t,l2_norm,hm1_norm,h10_norm\n");
    for n in &summary.norms {
        csv.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", n.t, n.l2, n.hm1, n.h10));
    }
    let xs = grid.points();
    let artifacts = vec![
        Artifact::new("trajectory.csv", csv),
        Artifact::new("final-field.csv", field_to_csv(last)),
        Artifact::new("plot-l2.dat", plot_data("L2 norm along the solution", ("t", "l2_norm"), summary.norms.iter().map(|n| (n.t, n.l2)))),
        Artifact::new(
            "plot-solution.dat",
            plot_data("solution at the final time", ("x", "u"), xs.iter().copied().zip(last.to_physical())),
        ),
    ];
    let results = serde_json::to_value(&summary)?;
    Ok(RunOutput { report: ExperimentReport::new(cfg, results, criteria, selfchecks), artifacts })
}

fn inflation_artifacts(tab: &InflationTable) -> Vec<Artifact> {
    let col = |f: fn(&crate::illposed::InflationRow) -> f64| tab.rows.iter().map(move |r| (r.n, f(r))).collect::<Vec<_>>();
    vec![
        Artifact::new("inflation.csv", tab.to_csv()),
        Artifact::new("plot-data-norm.dat", plot_data("H^s norm of the data", ("N", "data_norm"), col(|r| r.data_norm))),
        Artifact::new("plot-a2-band.dat", plot_data("H^s norm of A_2 on |xi| <= 1/2", ("N", "a2_norm_band"), col(|r| r.a2_norm_band))),
        Artifact::new("plot-a2-full.dat", plot_data("H^s norm of A_2", ("N", "a2_norm_full"), col(|r| r.a2_norm_full))),
    ]
}

fn run_inflation(cfg: &RunConfig) -> Result<RunOutput> {
    let icfg = &cfg.inflation;
    let tab = a2_inflation_experiment(icfg)?;
    let spacing = icfg.grid()?.spacing();
    let geometry: Vec<_> = icfg
        .block_values()
        .iter()
        .map(|&n| (resonance_constants(n, OBSERVATION_BAND, 64), real_part_check(n, icfg.t, OBSERVATION_BAND, spacing)))
        .collect();
    let criteria = vec![CriterionOutcome::new(
        "norm-inflation-signature",
        tab.pass(),
        format!(
            "data slope {:.4} (target {:.2} +- 0.05), A_2 band minimum / first = {:.4} (need >= 0.5)",
            tab.data_slope,
            1.0 + tab.s,
            tab.a2_band_min / tab.a2_band_first
        ),
    )];
    let selfchecks = if cfg.output.selfcheck {
        vec![SelfCheck::new("a2-experiment: A_2 band column, box doubled", quadrature_refinement(icfg)?, cfg.output.selfcheck_tolerance)]
    } else {
        Vec::new()
    };
    let results = json!({
        "table": tab,
        "resonance_constants": geometry.iter().map(|g| g.0).collect::<Vec<_>>(),
        "real_part_checks": geometry.iter().map(|g| g.1).collect::<Vec<_>>(),
    });
    Ok(RunOutput { report: ExperimentReport::new(cfg, results, criteria, selfchecks), artifacts: inflation_artifacts(&tab) })
}

fn discontinuity_artifacts(rep: &DiscontinuityReport) -> Vec<Artifact> {
    let mut out = vec![
        Artifact::new("discontinuity.csv", rep.to_csv()),
        Artifact::new("plot-flow-data-norm.dat", plot_data("H^s norm of the data", ("N", "data_norm"), rep.rows.iter().map(|r| (r.n, r.data_norm)))),
    ];
    for r in &rep.rows {
        out.push(Artifact::new(
            format!("plot-u-norm-N{}.dat", r.n),
            plot_data(&format!("H^s norm of u(t, eps phi_N), N = {}", r.n), ("eps", "u_norm"), r.scales.iter().map(|e| (e.eps, e.u_norm))),
        ));
        out.push(Artifact::new(
            format!("plot-residual-N{}.dat", r.n),
            plot_data(&format!("second-order residual, N = {}", r.n), ("eps", "residual"), r.scales.iter().map(|e| (e.eps, e.residual))),
        ));
    }
    out
}

fn run_discontinuity(cfg: &RunConfig) -> Result<RunOutput> {
    let dcfg = &cfg.discontinuity;
    let rep = flow_discontinuity_experiment(dcfg)?;
    let criteria = vec![CriterionOutcome::new(
        "flow-discontinuity",
        rep.pass(),
        format!(
            "residual order {:.3} (need >= 2.8), min |u| / (C0 eps^2) = {:.3} (need >= 0.4), data drop x{:.2} (need >= 4)",
            rep.min_order, rep.min_lower_ratio, rep.data_drop
        ),
    )];
    let mut selfchecks = Vec::new();
    if cfg.output.selfcheck {
        let fine_cfg = DiscontinuityConfig { n_modes: 2 * dcfg.n_modes, half_length: 2.0 * dcfg.half_length, ..dcfg.clone() };
        let fine = flow_discontinuity_experiment(&fine_cfg)?;
        let change = if fine.eps == rep.eps {
            max_change(rep.rows.iter().zip(&fine.rows).flat_map(|(a, b)| a.scales.iter().zip(&b.scales).map(|(x, y)| (x.u_norm, y.u_norm))))
        } else {
            f64::INFINITY
        };
        selfchecks.push(SelfCheck::new("discontinuity: u_norm column, box doubled", change, cfg.output.selfcheck_tolerance));
    }
    let results = serde_json::to_value(&rep)?;
    Ok(RunOutput { report: ExperimentReport::new(cfg, results, criteria, selfchecks), artifacts: discontinuity_artifacts(&rep) })
}

/// Space-time field of `norm` on the window `[-2, 2]`.
pub fn spacetime_field(cfg: &RunConfig, u0: &Field) -> Result<SpaceTimeField<f64>> {
    let tgrid = TimeGrid::two_sided(1.0, cfg.spacetime.n_steps)?;
    let xgrid = *u0.grid();
    match cfg.spacetime.source {
        FieldSource::Linear => SpaceTimeField::from_fn(tgrid, xgrid, |t| w_propagate(u0, t, t).scale(eta(t))),
        FieldSource::FixedPoint => {
            let (traj, _) = windowed_fixed_point(u0, 1.0, tgrid, 80, 1e-12)?;
            let mut slices: Vec<Vec<Cplx<f64>>> = traj.into_snapshots().into_iter().map(|s| s.into_coeffs()).collect();
            slices.pop();
            SpaceTimeField::from_time_slices(tgrid, xgrid, &slices, u0.is_real())
        }
    }
}

fn evaluate_on(cfg: &RunConfig, grid: FrequencyGrid<f64>) -> Result<NormValue> {
    let u0 = build_datum(cfg, grid)?;
    evaluate(&spacetime_field(cfg, &u0)?, &cfg.norm)
}

fn run_norm(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = cfg.grid.build()?;
    let value = evaluate_on(cfg, grid)?;
    let kind = serde_json::to_value(cfg.norm.kind)?.as_str().unwrap_or_default().to_string();
    let criteria = vec![CriterionOutcome::new("norm-finite", value.value.is_finite(), format!("{kind} norm = {:.6e}", value.value))];
    let mut selfchecks = Vec::new();
    if cfg.output.selfcheck && localized(cfg) {
        let fine = evaluate_on(cfg, grid.doubled_box())?;
        selfchecks.push(SelfCheck::new("norm: value, box doubled", relative_change(value.value, fine.value), cfg.output.selfcheck_tolerance));
    }
    let spec = &cfg.norm;
    let mut artifacts = vec![Artifact::new(
        "norm.csv",
        format!(
            "kind,s,b,q,beta,value,upper_bound\n{},{},{},{},{},{:.17e},{}\n",
            kind,
            spec.s,
            spec.b,
            spec.q,
            spec.beta,
            value.value,
            value.upper_bound
        ),
    )];
    if let Some(ledger) = &value.ledger {
        artifacts.push(Artifact::new("norm-ledger.csv", ledger.to_csv()));
    }
    let results = serde_json::to_value(&value)?;
    Ok(RunOutput { report: ExperimentReport::new(cfg, results, criteria, selfchecks), artifacts })
}

fn audit_csv(reports: &[RatioReport]) -> String {
    let mut out = String::from("id,sample_count,skipped,unresolved,max_ratio,max_ratio_doubled,growth,time_exponent,z_monotone,pass\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{:.17e},{},{},{},{},{}\n",
            r.id,
            r.sample_count,
            r.skipped,
            r.unresolved,
            r.max_ratio,
            fmt_opt(r.max_ratio_doubled),
            fmt_opt(r.growth),
            fmt_opt(r.time_fit.as_ref().map(|f| f.exponent)),
            r.z_monotone.map(|z| z.to_string()).unwrap_or_default(),
            r.pass.map(|p| p.to_string()).unwrap_or_default()
        ));
    }
    out
}

fn run_audit(cfg: &RunConfig) -> Result<RunOutput> {
    let acfg = cfg.audit_config();
    let reports = acfg.ids.iter().map(|&id| inequality_audit(id, &acfg)).collect::<Result<Vec<_>>>()?;
    let mut criteria = Vec::new();
    let mut artifacts = vec![Artifact::new("audit.csv", audit_csv(&reports))];
    for r in &reports {
        if let Some(pass) = r.pass {
            let detail = match &r.time_fit {
                Some(fit) => format!("T-exponent {:.4} (need > 0)", fit.exponent),
                None => format!(
                    "max ratio {:.4e}, growth under doubling {} (ceiling {})",
                    r.max_ratio,
                    r.growth.map_or("n/a".into(), |g| format!("{:.2}%", 100.0 * g)),
                    r.ceiling
                ),
            };
            criteria.push(CriterionOutcome::new(format!("inequality-audit/{}", r.id), pass, detail));
        }
        if let Some(fit) = &r.time_fit {
            artifacts.push(Artifact::new(
                format!("plot-time-fit-{}.dat", r.id),
                plot_data(&format!("largest ratio of {} against T", r.id), ("T", "max_ratio"), fit.t_values.iter().copied().zip(fit.max_ratios.iter().copied())),
            ));
        }
    }
    let z: Vec<bool> = reports.iter().filter_map(|r| r.z_monotone).collect();
    if !z.is_empty() {
        criteria.push(CriterionOutcome::new(
            "z-beta-monotone",
            z.iter().all(|&b| b),
            format!("{} of {} audits with Z_beta evaluations monotone in beta", z.iter().filter(|&&b| b).count(), z.len()),
        ));
    }
    let results = serde_json::to_value(&reports)?;
    Ok(RunOutput { report: ExperimentReport::new(cfg, results, criteria, Vec::new()), artifacts })
}

/// Largest deviations of the exact identities on one grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityErrors {
    pub plancherel: f64,
    pub partition_of_unity: f64,
    pub resonance: f64,
    pub w_equals_s: f64,
    pub airy_unitarity: f64,
    /// `max (||S(t) u|| / ||u|| - 1)`, nonpositive when contractive.
    pub contractivity_excess: f64,
}

impl IdentityErrors {
    pub const ROUNDOFF: f64 = 1e-12;
    pub const PLANCHEREL: f64 = 1e-10;

    pub fn hold(&self) -> bool {
        self.plancherel <= Self::PLANCHEREL
            && self.partition_of_unity <= Self::ROUNDOFF
            && self.resonance <= Self::ROUNDOFF
            && self.w_equals_s <= Self::ROUNDOFF
            && self.airy_unitarity <= Self::ROUNDOFF
            && self.contractivity_excess <= Self::ROUNDOFF
    }
}

/// Measures the exact identities on `grid` with random data from `seed`.
pub fn identity_errors(grid: FrequencyGrid<f64>, seed: u64) -> Result<IdentityErrors> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_datum(grid, 0.5 * grid.nyquist(), &mut rng);
    let norm = u.l2_norm();
    let plancherel = (physical_l2(&grid, &u.to_physical_complex()) / norm - 1.0).abs();
    let range = frequency_range(&grid);
    let partition_of_unity = (0..grid.n_modes())
        .map(|k| grid.xi(k))
        .filter(|&xi| xi != 0.0)
        .map(|xi| (range.weights_at(xi).map(|(_, w)| w).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let resonance = (0..1000)
        .map(|_| {
            let a: f64 = rng.random_range(-100.0..100.0);
            let b: f64 = rng.random_range(-100.0..100.0);
            let c = -a - b;
            let scale = a.abs().max(b.abs()).max(c.abs()).powi(3);
            (a.powi(3) + b.powi(3) + c.powi(3) - 3.0 * a * b * c).abs() / scale
        })
        .fold(0.0, f64::max);
    let mut w_equals_s = 0.0f64;
    let mut airy_unitarity = 0.0f64;
    let mut contractivity_excess = f64::NEG_INFINITY;
    for t in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let s = s_propagate(&u, t)?;
        let w = w_propagate(&u, t, t);
        w_equals_s = w_equals_s.max(w.sub(&s)?.l2_norm() / norm);
        airy_unitarity = airy_unitarity.max((airy_propagate(&u, t).l2_norm() / norm - 1.0).abs());
        contractivity_excess = contractivity_excess.max(s.l2_norm() / norm - 1.0);
    }
    Ok(IdentityErrors { plancherel, partition_of_unity, resonance, w_equals_s, airy_unitarity, contractivity_excess })
}

fn run_grids_selfcheck(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = cfg.grid.build()?;
    let errors = identity_errors(grid, cfg.seed)?;
    let criteria = vec![CriterionOutcome::new(
        "exact-identities",
        errors.hold(),
        format!(
            "plancherel {:.1e}, partition {:.1e}, resonance {:.1e}, W = S {:.1e}, Airy unitarity {:.1e}, contractivity excess {:.1e}",
            errors.plancherel, errors.partition_of_unity, errors.resonance, errors.w_equals_s, errors.airy_unitarity, errors.contractivity_excess
        ),
    )];
    let summary = integrate(&build_datum(cfg, grid)?, cfg)?;
    // the box check is the point of this command, so it ignores `output.selfcheck`
    let forced = RunConfig { output: crate::io::config::OutputConfig { selfcheck: true, ..cfg.output.clone() }, ..cfg.clone() };
    let selfchecks: Vec<SelfCheck> = box_doubling(&forced, &summary)?.into_iter().collect();
    let mut csv = String::from("check,value,tolerance,pass\n");
    for (name, v, tol) in [
        ("plancherel", errors.plancherel, IdentityErrors::PLANCHEREL),
        ("partition_of_unity", errors.partition_of_unity, IdentityErrors::ROUNDOFF),
        ("resonance", errors.resonance, IdentityErrors::ROUNDOFF),
        ("w_equals_s", errors.w_equals_s, IdentityErrors::ROUNDOFF),
        ("airy_unitarity", errors.airy_unitarity, IdentityErrors::ROUNDOFF),
        ("contractivity_excess", errors.contractivity_excess, IdentityErrors::ROUNDOFF),
    ] {
        csv.push_str(&format!("{name},{v:.17e},{tol:e},{}\n", v <= tol));
    }
    for c in &selfchecks {
        csv.push_str(&format!("box_doubling,{:.17e},{:e},{}\n", c.max_relative_change, c.tolerance, c.pass));
    }
    let results = json!({ "identities": errors, "solve": summary });
    Ok(RunOutput { report: ExperimentReport::new(cfg, results, criteria, selfchecks), artifacts: vec![Artifact::new("selfcheck.csv", csv)] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::GridConfig;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid = GridConfig { n_modes: 256, half_length: 16.0 * std::f64::consts::PI };
        cfg
    }

    #[test]
    fn random_datum_is_real_and_band_limited() {
        let grid = FrequencyGrid::new(10.0, 128).unwrap();
        let u = random_datum(grid, 3.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(u.hermitian_defect(), 0.0);
        for (k, c) in u.coeffs().iter().enumerate() {
            if grid.xi(k).abs() > 3.0 {
                assert_eq!(*c, Cplx::new(0.0, 0.0));
            }
        }
        assert!(u.l2_norm() > 0.0);
    }

    #[test]
    fn zero_datum_solve_passes_trivially() {
        let mut cfg = small();
        cfg.datum.kind = DatumKind::Zero;
        let out = run(&cfg).unwrap();
        assert!(out.report.pass, "{:?}", out.report.criteria);
        assert!(out.report.criteria.iter().any(|c| c.criterion == "domain-truncation"));
        let traj = &out.artifacts[0].contents;
        assert!(traj.lines().skip(1).all(|l| l.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0)));
    }

    #[test]
    fn exact_identities_hold_on_the_desk_grid() {
        let errors = identity_errors(RunConfig::default().grid.build().unwrap(), 11).unwrap();
        assert!(errors.hold(), "{errors:?}");
    }

    #[test]
    fn runs_past_the_horizon_restart() {
        let mut cfg = small();
        cfg.solve.t_end = 1.25;
        cfg.output.selfcheck = false;
        let s = integrate(&build_datum(&cfg, cfg.grid.build().unwrap()).unwrap(), &cfg).unwrap();
        assert_eq!(s.restarts.len(), 3);
        assert!((s.norms.last().unwrap().t - 1.25).abs() < 1e-12);
        assert!(s.energy_defect < 1e-4, "{}", s.energy_defect);
    }
}
