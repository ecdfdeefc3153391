//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.
//!
//! Run with `cargo test -p kdvb-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use kdvb_core::duhamel::schedule::StepSchedule;
use kdvb_core::duhamel::solver::{continue_globally, solve, SnapshotPolicy, SolverConfig};
use kdvb_core::duhamel::{a2_explicit, picard_coefficients};
use kdvb_core::fit::loglog_slope;
use kdvb_core::illposed::{
    a2_inflation_experiment, flow_discontinuity_experiment, make_phi_n, AmplitudeConvention, DiscontinuityConfig, InflationConfig,
};
use kdvb_core::io::run::{identity_errors, random_datum};
use kdvb_core::norms::audit::{inequality_audit, AuditConfig, AuditId, RatioReport};
use kdvb_core::norms::bourgain::CellTable;
use kdvb_core::norms::sobolev_norm;
use kdvb_core::norms::sum::{SumCosts, SumSpace};
use kdvb_core::semigroup::LinearKernel;
use kdvb_core::{DyadicIndex, FrequencyGrid, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gaussian(grid: FrequencyGrid, amplitude: f64, width: f64) -> SpectralField {
    let u: Vec<f64> = grid.points().iter().map(|x| amplitude * (-(x / width).powi(2)).exp()).collect();
    SpectralField::from_physical(grid, &u).unwrap()
}

fn norm_inflation() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let tab = pool.install(|| a2_inflation_experiment(&InflationConfig::default())).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let band: Vec<String> = tab.rows.iter().map(|r| format!("{:.4e}", r.a2_norm_band)).collect();
    outcome(
        tab.slope_ok && tab.nondecay_ok && secs < 120.0,
        format!(
            "data slope {:.4} (target -0.25 +- 0.05); A_2 band column [{}], min/first {:.3}; {:.2} s on one thread",
            tab.data_slope,
            band.join(", "),
            tab.a2_band_min / tab.a2_band_first,
            secs
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let grid = FrequencyGrid::new(8.0 * PI, 128).unwrap();
    let cfg = SolverConfig { schedule: StepSchedule::Uniform { steps: 400 }, snapshots: SnapshotPolicy::Endpoints, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let h = random_datum(grid, 2.0, &mut rng);
        let exact = a2_explicit(0.5, &h).unwrap();
        let series = picard_coefficients(&h, 2, &cfg).unwrap();
        let err = exact.sub(series.coefficient(2).last()).unwrap().l2_norm() / exact.l2_norm();
        worst = worst.max(err);
    }
    outcome(worst <= 1e-6, format!("largest relative L2 difference {worst:.3e} over 10 random data (limit 1e-6)"))
}

fn flow_discontinuity() -> Outcome {
    let rep = flow_discontinuity_experiment(&DiscontinuityConfig::default()).unwrap();
    outcome(
        rep.pass(),
        format!(
            "eps {:?}; residual order {:.3} (>= 2.8); min |u| / (C0 eps^2) {:.3} (>= 0.4, C0 = {:.4e}); data drop x{:.2} (>= 4)",
            rep.eps, rep.min_order, rep.min_lower_ratio, rep.c0_hat, rep.data_drop
        ),
    )
}

fn exact_identities() -> Outcome {
    let machine = 16.0 * f64::EPSILON;
    let mut worst = [0.0f64; 4];
    for (i, (half, n)) in [(8.0 * PI, 128), (256.0 * PI, 4096), (3.0, 64)].into_iter().enumerate() {
        let e = identity_errors(FrequencyGrid::new(half, n).unwrap(), 100 + i as u64).unwrap();
        worst[0] = worst[0].max(e.resonance);
        worst[1] = worst[1].max(e.w_equals_s);
        worst[2] = worst[2].max(e.airy_unitarity);
        worst[3] = worst[3].max(e.contractivity_excess);
    }
    outcome(
        worst[0] <= machine && worst[1] <= machine && worst[2] <= 1e-12 && worst[3] <= 1e-12,
        format!(
            "resonance {:.1e}, W(t,t) - S(t) {:.1e} (both <= {machine:.1e}); Airy unitarity {:.1e}, contractivity excess {:.1e} (<= 1e-12)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn energy_defect(u0: &SpectralField, cfg: &SolverConfig) -> f64 {
    let sol = solve(u0, cfg).unwrap();
    let traj = &sol.trajectory;
    let l2sq: Vec<f64> = traj.snapshots().iter().map(|s| s.l2_norm().powi(2)).collect();
    let grad: Vec<f64> = traj.snapshots().iter().map(|s| s.derivative().l2_norm().powi(2)).collect();
    let dissipated: f64 = traj.times().windows(2).zip(grad.windows(2)).map(|(t, g)| (t[1] - t[0]) * (g[0] + g[1])).sum();
    (l2sq.last().unwrap() + dissipated - l2sq[0]).abs()
}

fn solver_physics() -> Outcome {
    let grid = FrequencyGrid::new(8.0 * PI, 128).unwrap();
    let u0 = gaussian(grid, 1.0, 2.0);
    let steps = [25usize, 50, 100, 200];
    let dts: Vec<f64> = steps.iter().map(|&s| 0.5 / s as f64).collect();
    let defects: Vec<f64> = steps
        .iter()
        .map(|&s| energy_defect(&u0, &SolverConfig { schedule: StepSchedule::Uniform { steps: s }, ..Default::default() }))
        .collect();
    let order = loglog_slope(&dts, &defects);
    let shown: Vec<String> = defects.iter().map(|d| format!("{d:.2e}")).collect();
    let kdv = SolverConfig { horizon: 0.1, kernel: LinearKernel::Kdv, ..Default::default() };
    let sol = solve(&u0, &kdv).unwrap();
    let n0 = u0.l2_norm();
    let drift = sol.trajectory.snapshots().iter().map(|s| (s.l2_norm() - n0).abs() / n0).fold(0.0, f64::max);
    outcome(
        order >= 1.8 && drift <= 1e-6,
        format!("energy residual order {order:.3} (>= 1.8), defects [{}]; KdV L2 drift {drift:.2e} over [0, 0.1] (<= 1e-6)", shown.join(", ")),
    )
}

fn audit_reports() -> Vec<RatioReport> {
    let cfg = AuditConfig::default();
    AuditId::ALL.iter().filter(|&&id| id != AuditId::BilZ).map(|&id| inequality_audit(id, &cfg).unwrap()).collect()
}

fn audit_suite(reports: &[RatioReport]) -> Outcome {
    let failed: Vec<String> = reports.iter().filter(|r| r.pass != Some(true)).map(|r| r.id.to_string()).collect();
    let summary: Vec<String> = reports
        .iter()
        .map(|r| match &r.time_fit {
            Some(f) => format!("{} T^{:.3}", r.id, f.exponent),
            None => format!("{} {:.3}/{:+.1}%", r.id, r.max_ratio, 100.0 * r.growth.unwrap_or(f64::NAN)),
        })
        .collect();
    let detail = if failed.is_empty() { summary.join(", ") } else { format!("failing: {}; {}", failed.join(", "), summary.join(", ")) };
    outcome(failed.is_empty() && reports.len() == 12, detail)
}

fn random_costs(rng: &mut ChaCha8Rng, space: SumSpace) -> SumCosts<f64> {
    let blocks: Vec<DyadicIndex> = (0..4).map(DyadicIndex).collect();
    let mut cells = || -> Vec<f64> { (0..16).map(|_| rng.random_range(0.0f64..1.0).powi(2)).collect() };
    let x = CellTable::new(blocks.clone(), blocks.clone(), cells()).unwrap();
    let yv = cells();
    let y_rows: Vec<f64> = yv.chunks(4).map(|row| row.iter().sum::<f64>() * rng.random_range(0.5..1.2)).collect();
    let y = CellTable::new(blocks.clone(), blocks, yv).unwrap();
    SumCosts::from_tables(space, x, y, y_rows).unwrap()
}

fn sum_space_oracle(reports: &[RatioReport]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    let mut instances = 0;
    for case in 0..40 {
        let space = if case % 2 == 0 { SumSpace::Resolution } else { SumSpace::Nonlinear };
        let costs = random_costs(&mut rng, space);
        for s in [-1.0, 0.0, 0.5] {
            instances += 1;
            if costs.greedy(s).0 != costs.brute_force(s).unwrap() {
                mismatches += 1;
            }
        }
    }
    let z: Vec<(AuditId, bool)> = reports.iter().filter_map(|r| r.z_monotone.map(|z| (r.id, z))).collect();
    let z_ok = !z.is_empty() && z.iter().all(|&(_, ok)| ok);
    outcome(
        mismatches == 0 && z_ok,
        format!(
            "greedy = brute force on {}/{instances} 4x4 instances; Z_beta monotone on the samples of {} audits ({})",
            instances - mismatches,
            z.len(),
            z.iter().map(|(id, ok)| format!("{id}: {ok}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn picard_contraction() -> Outcome {
    let grid = FrequencyGrid::new(256.0 * PI, 4096).unwrap();
    let cfg = SolverConfig::default();
    let scale_to = |u: SpectralField, size: f64| {
        let n = sobolev_norm(&u, -1.0);
        u.scale(size / n)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = [
        ("gaussian", scale_to(gaussian(grid, 1.0, 2.0), 0.01)),
        ("random", scale_to(random_datum(grid, 2.0, &mut rng), 0.01)),
        ("phi_4", scale_to(make_phi_n(grid, DyadicIndex(2), AmplitudeConvention::Corrected).unwrap(), 0.01)),
    ];
    let mut worst = 0.0f64;
    let mut converged = true;
    for (_, u0) in &data {
        let sol = solve(u0, &cfg).unwrap();
        converged &= sol.converged;
        worst = worst.max(sol.max_ratio().unwrap_or(0.0));
    }
    let h10 = |grid: FrequencyGrid, steps: usize| {
        let u0 = scale_to(gaussian(grid, 1.0, 2.0), 0.01);
        let c = SolverConfig { schedule: StepSchedule::Uniform { steps }, snapshots: SnapshotPolicy::Endpoints, ..Default::default() };
        let sol = continue_globally(&u0, 2.0, &c).unwrap();
        (sobolev_norm(sol.trajectory.last(), 10.0), sol.converged)
    };
    let (coarse, c1) = h10(grid, 200);
    let (fine, c2) = h10(grid.refined(), 400);
    let change = (fine - coarse).abs() / coarse;
    outcome(
        converged && c1 && c2 && worst <= 0.5 && coarse.is_finite() && change < 0.02,
        format!("largest ratio from iteration 2 on {worst:.3e} (<= 0.5); H^10 norm at t = 2: {coarse:.6e}, change under doubling {change:.2e} (< 2%)"),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!("{} criterion {n} ({name}): {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, start.elapsed().as_secs_f64());
    };
    report(1, "norm-inflation signature", &norm_inflation);
    report(2, "oracle equivalence", &oracle_equivalence);
    report(3, "flow discontinuity", &flow_discontinuity);
    report(4, "exact identities", &exact_identities);
    report(5, "solver physics", &solver_physics);
    let start = Instant::now();
    let reports = audit_reports();
    let audit_secs = start.elapsed().as_secs_f64();
    report(6, "inequality audit suite", &|| {
        let mut o = audit_suite(&reports);
        o.detail.push_str(&format!("; audits ran {audit_secs:.1} s"));
        o
    });
    report(7, "sum-space oracle", &|| sum_space_oracle(&reports));
    report(8, "Picard contraction", &picard_contraction);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
