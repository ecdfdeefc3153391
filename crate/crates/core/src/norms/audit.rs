//! Numerical audit of the linear and bilinear estimates.
//!
//! Each estimate `LHS <= C RHS` is measured as the largest `LHS / RHS` over seeded samples
//! from three generator classes, once at the base resolution and once with both the number
//! of modes and the number of time steps doubled. Estimates with a power of the time
//! support `T` are also measured for several `T` and the exponent of the largest ratio
//! is fitted.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel::extended::{extended_duhamel_spacetime, windowed_fixed_point};
use crate::duhamel::schedule::StepSchedule;
use crate::duhamel::solver::{solve, SnapshotPolicy, SolverConfig};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::norms::bourgain::{l1l2_per_block, ysb_norm};
use crate::norms::mixed::{mixed_norm_samples, Exponent, MixedOrder};
use crate::norms::sobolev::sobolev_norm;
use crate::norms::sum::{z_beta_from_costs, SumCosts, SumSpace};
use crate::scalar::Cplx;
use crate::semigroup::{airy_propagate, kato_ratio, w_propagate};
use crate::spectral::bracket;
use crate::spectral::cutoff::eta;
use crate::spectral::field::{ProductWorkspace, SpectralField};
use crate::spectral::grid::{FrequencyGrid, TimeGrid};
use crate::spectral::spacetime::SpaceTimeField;

type Field = SpectralField<f64>;
type StField = SpaceTimeField<f64>;

/// Estimates covered by the audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AuditId {
    #[serde(rename = "kato")]
    Kato,
    #[serde(rename = "est-Y0")]
    EstY0,
    #[serde(rename = "est-L2S-1")]
    EstL2S1,
    #[serde(rename = "est-L2l2")]
    EstL2l2,
    #[serde(rename = "est-Lit")]
    EstLit,
    #[serde(rename = "est-smooth")]
    EstSmooth,
    #[serde(rename = "est-lin")]
    EstLin,
    #[serde(rename = "est-linNhom")]
    EstLinNhom,
    #[serde(rename = "est-bil")]
    EstBil,
    #[serde(rename = "lem-Xinfty")]
    LemXinfty,
    #[serde(rename = "est-bil3")]
    EstBil3,
    #[serde(rename = "strichartz")]
    Strichartz,
    /// Product bound in `Z_beta`; reported, never judged.
    #[serde(rename = "bil-Z")]
    BilZ,
}

impl AuditId {
    pub const ALL: [AuditId; 13] = [
        AuditId::Kato,
        AuditId::EstY0,
        AuditId::EstL2S1,
        AuditId::EstL2l2,
        AuditId::EstLit,
        AuditId::EstSmooth,
        AuditId::EstLin,
        AuditId::EstLinNhom,
        AuditId::EstBil,
        AuditId::LemXinfty,
        AuditId::EstBil3,
        AuditId::Strichartz,
        AuditId::BilZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditId::Kato => "kato",
            AuditId::EstY0 => "est-Y0",
            AuditId::EstL2S1 => "est-L2S-1",
            AuditId::EstL2l2 => "est-L2l2",
            AuditId::EstLit => "est-Lit",
            AuditId::EstSmooth => "est-smooth",
            AuditId::EstLin => "est-lin",
            AuditId::EstLinNhom => "est-linNhom",
            AuditId::EstBil => "est-bil",
            AuditId::LemXinfty => "lem-Xinfty",
            AuditId::EstBil3 => "est-bil3",
            AuditId::Strichartz => "strichartz",
            AuditId::BilZ => "bil-Z",
        }
    }

    /// Estimates carrying a positive power of the time support.
    pub fn is_time_dependent(self) -> bool {
        matches!(self, AuditId::EstBil3 | AuditId::Strichartz)
    }

    fn input(self) -> Input {
        match self {
            AuditId::Kato | AuditId::EstLin | AuditId::LemXinfty => Input::Datum,
            AuditId::EstBil | AuditId::EstBil3 | AuditId::BilZ => Input::Pair,
            _ => Input::Single,
        }
    }
}

impl fmt::Display for AuditId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AuditId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AuditId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown audit id `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Input {
    Datum,
    Single,
    Pair,
}

/// Generator classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleClass {
    /// Random bumps localised in one frequency block and one modulation block.
    DyadicBumps,
    /// Time-windowed free waves `eta(t) W(t) phi`.
    FreeWaves,
    /// Fixed points of the windowed Duhamel map (final states of the solver for data).
    SolverOutputs,
}

impl SampleClass {
    pub const ALL: [SampleClass; 3] = [SampleClass::DyadicBumps, SampleClass::FreeWaves, SampleClass::SolverOutputs];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Audits run by a batch `audit` command.
    pub ids: Vec<AuditId>,
    pub samples_per_class: usize,
    /// Set from the run seed, not from the `audit` section.
    #[serde(skip)]
    pub seed: u64,
    pub n_modes: usize,
    pub half_length: f64,
    /// Time steps over the window `[-2, 2]`.
    pub n_steps: usize,
    /// Largest admissible relative growth of the max ratio under resolution doubling.
    pub growth_ceiling: f64,
    /// Time supports for the estimates with a power of `T`.
    pub t_values: Vec<f64>,
    /// Samples are essentially band-limited to `|xi| <= max_frequency`.
    pub max_frequency: f64,
    /// `H^{-1}` size of the data fed to the solver class.
    pub solver_amplitude: f64,
    /// Time support for the `Z_beta` product report.
    pub z_time: f64,
    pub z_betas: Vec<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            ids: AuditId::ALL.to_vec(),
            samples_per_class: 6,
            seed: 2024,
            n_modes: 64,
            half_length: 4.0 * std::f64::consts::PI,
            n_steps: 512,
            growth_ceiling: 0.10,
            t_values: vec![1.0, 0.5, 0.25, 0.125],
            max_frequency: 3.2,
            solver_amplitude: 0.1,
            z_time: 0.25,
            z_betas: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: format!("audit.{key}"), message });
        if self.ids.is_empty() {
            return bad("ids", "select at least one audit".into());
        }
        if self.samples_per_class == 0 {
            return bad("samples_per_class", "must be positive".into());
        }
        if !(self.growth_ceiling > 0.0) {
            return bad("growth_ceiling", "must be positive".into());
        }
        if self.t_values.len() < 2 || self.t_values.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return bad("t_values", "need at least two values in (0, 1]".into());
        }
        if !(self.z_time > 0.0 && self.z_time <= 1.0) {
            return bad("z_time", "must lie in (0, 1]".into());
        }
        if self.z_betas.iter().any(|&b| !(b >= 1.0)) {
            return bad("z_betas", "every beta must be >= 1".into());
        }
        let grids = self.grids()?;
        if !(self.max_frequency > 0.0 && self.max_frequency <= 0.45 * grids.x.nyquist()) {
            return bad("max_frequency", format!("must lie in (0, {:.3}] so products stay resolved", 0.45 * grids.x.nyquist()));
        }
        Ok(())
    }

    pub fn grids(&self) -> Result<AuditGrids> {
        Ok(AuditGrids {
            x: FrequencyGrid::new(self.half_length, self.n_modes)?,
            t: TimeGrid::two_sided(1.0, self.n_steps)?,
        })
    }
}

/// Space and time grids of one audit resolution. The time window is `[-2, 2]`, the support
/// of `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditGrids {
    pub x: FrequencyGrid<f64>,
    pub t: TimeGrid<f64>,
}

impl AuditGrids {
    pub fn refined(&self) -> Self {
        Self { x: self.x.refined(), t: self.t.refined() }
    }
}

/// Sum of Gaussian bumps in frequency, mirrored so the function is real.
#[derive(Clone, Debug, PartialEq)]
struct Spectrum {
    bumps: Vec<(f64, f64, Cplx<f64>)>,
}

impl Spectrum {
    fn positive(&self, xi: f64) -> Cplx<f64> {
        self.bumps
            .iter()
            .fold(Cplx::new(0.0, 0.0), |acc, &(c, w, a)| acc + a * (-0.5 * ((xi - c) / w).powi(2)).exp())
    }

    fn eval(&self, xi: f64) -> Cplx<f64> {
        self.positive(xi) + self.positive(-xi).conj()
    }

    fn field(&self, xg: FrequencyGrid<f64>) -> Field {
        SpectralField::from_fn(xg, true, |xi| self.eval(xi))
    }

    fn single(rng: &mut ChaCha8Rng, block: f64, max_frequency: f64) -> Self {
        let width = rng.random_range(0.12..0.3);
        let centre = (block * rng.random_range(0.75..1.5)).min(max_frequency - 2.0 * width).max(0.0);
        Self { bumps: vec![(centre, width, random_amplitude(rng))] }
    }

    fn several(rng: &mut ChaCha8Rng, count: usize, max_frequency: f64) -> Self {
        let bumps = (0..count)
            .map(|_| {
                let width = rng.random_range(0.2..0.5);
                let centre = rng.random_range(0.0..(max_frequency - 2.0 * width));
                (centre, width, random_amplitude(rng))
            })
            .collect();
        Self { bumps }
    }
}

fn random_amplitude(rng: &mut ChaCha8Rng) -> Cplx<f64> {
    Cplx::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..std::f64::consts::TAU))
}

fn random_block(rng: &mut ChaCha8Rng, max_frequency: f64) -> f64 {
    let top = (max_frequency / 1.5).log2().floor() as i32;
    2f64.powi(rng.random_range(-1..=top.max(-1)))
}

/// Seeded recipe for a space-time sample, realised on any grid.
#[derive(Clone, Debug, PartialEq)]
enum StRecipe {
    Bump { spectrum: Spectrum, modulation: f64, duration: f64 },
    FreeWave { spectrum: Spectrum, duration: f64 },
    Solver { datum: Spectrum, cutoff: f64 },
}

impl StRecipe {
    fn draw(class: SampleClass, rng: &mut ChaCha8Rng, cfg: &AuditConfig, block: Option<f64>) -> Self {
        match class {
            SampleClass::DyadicBumps => {
                let block = block.unwrap_or_else(|| random_block(rng, cfg.max_frequency));
                let spectrum = Spectrum::single(rng, block, cfg.max_frequency);
                let l = 2f64.powi(rng.random_range(0..=5));
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Self::Bump { spectrum, modulation: sign * l * rng.random_range(0.75..1.5), duration: rng.random_range(0.6..0.9) }
            }
            SampleClass::FreeWaves => {
                Self::FreeWave { spectrum: Spectrum::several(rng, 3, cfg.max_frequency), duration: rng.random_range(0.6..0.9) }
            }
            SampleClass::SolverOutputs => {
                Self::Solver { datum: Spectrum::several(rng, 3, cfg.max_frequency), cutoff: rng.random_range(0.3..0.7) }
            }
        }
    }

    fn realize(&self, g: &AuditGrids, cfg: &AuditConfig) -> Result<StField> {
        match self {
            StRecipe::Bump { spectrum, modulation, duration } => SpaceTimeField::from_fn(g.t, g.x, |t| {
                let rot = Cplx::from_polar(1.0, modulation * t);
                let w = eta(t / duration);
                SpectralField::from_fn(g.x, true, |xi| {
                    let v = spectrum.positive(xi) * rot + (spectrum.positive(-xi) * rot).conj();
                    v * Cplx::from_polar(w, t * xi * xi * xi)
                })
            }),
            StRecipe::FreeWave { spectrum, duration } => {
                let phi = spectrum.field(g.x);
                SpaceTimeField::from_fn(g.t, g.x, |t| w_propagate(&phi, t, t).scale(eta(t / duration)))
            }
            StRecipe::Solver { datum, cutoff } => {
                let phi = scaled_datum(datum, g.x, cfg.solver_amplitude);
                let (traj, _) = windowed_fixed_point(&phi, *cutoff, g.t, 80, 1e-12)?;
                let mut slices: Vec<Vec<Cplx<f64>>> = traj.into_snapshots().into_iter().map(|s| s.into_coeffs()).collect();
                slices.pop();
                SpaceTimeField::from_time_slices(g.t, g.x, &slices, true)
            }
        }
    }
}

fn scaled_datum(spectrum: &Spectrum, xg: FrequencyGrid<f64>, size: f64) -> Field {
    let phi = spectrum.field(xg);
    let n = sobolev_norm(&phi, -1.0);
    phi.scale(size / n)
}

/// Seeded recipe for a spatial datum.
#[derive(Clone, Debug, PartialEq)]
enum DatumRecipe {
    Bump(Spectrum),
    Several(Spectrum),
    /// State at `t = 0.5` of the solver started from the spectrum.
    Evolved(Spectrum),
}

impl DatumRecipe {
    fn draw(class: SampleClass, rng: &mut ChaCha8Rng, cfg: &AuditConfig) -> Self {
        match class {
            SampleClass::DyadicBumps => {
                let b = random_block(rng, cfg.max_frequency);
                DatumRecipe::Bump(Spectrum::single(rng, b, cfg.max_frequency))
            }
            SampleClass::FreeWaves => DatumRecipe::Several(Spectrum::several(rng, 3, cfg.max_frequency)),
            SampleClass::SolverOutputs => DatumRecipe::Evolved(Spectrum::several(rng, 3, cfg.max_frequency)),
        }
    }

    fn realize(&self, g: &AuditGrids, cfg: &AuditConfig) -> Result<Field> {
        match self {
            DatumRecipe::Bump(s) | DatumRecipe::Several(s) => Ok(s.field(g.x)),
            DatumRecipe::Evolved(s) => {
                let u0 = scaled_datum(s, g.x, cfg.solver_amplitude * 10.0);
                let solver = SolverConfig {
                    horizon: 0.5,
                    schedule: StepSchedule::Uniform { steps: 100 },
                    snapshots: SnapshotPolicy::Endpoints,
                    ..SolverConfig::default()
                };
                Ok(solve(&u0, &solver)?.trajectory.last().clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Recipe {
    Datum(DatumRecipe),
    Single(StRecipe),
    Pair(StRecipe, StRecipe),
}

fn draw_samples(id: AuditId, class: SampleClass, cfg: &AuditConfig) -> Vec<Recipe> {
    let salt = SampleClass::ALL.iter().position(|&c| c == class).unwrap() as u64 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (salt << 40));
    (0..cfg.samples_per_class)
        .map(|_| match id.input() {
            Input::Datum => Recipe::Datum(DatumRecipe::draw(class, &mut rng, cfg)),
            Input::Single => Recipe::Single(StRecipe::draw(class, &mut rng, cfg, None)),
            Input::Pair => {
                // high-high pairs: both factors in the same frequency block
                let block = (class == SampleClass::DyadicBumps).then(|| random_block(&mut rng, cfg.max_frequency));
                let u = StRecipe::draw(class, &mut rng, cfg, block);
                let v = StRecipe::draw(class, &mut rng, cfg, block);
                Recipe::Pair(u, v)
            }
        })
        .collect()
}

/// One measured `LHS / RHS`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Measurement {
    lhs: f64,
    rhs: f64,
    /// Whether the `Z_beta` norms of the sample are monotone in `beta` and below `S^{-1}`.
    z_consistent: Option<bool>,
    resolved: bool,
}

impl Measurement {
    const UNRESOLVED: Measurement = Measurement { lhs: 0.0, rhs: 0.0, z_consistent: None, resolved: false };

    fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

fn resolution_costs(u: &StField) -> Result<SumCosts<f64>> {
    SumCosts::compute(u, SumSpace::Resolution)
}

fn nonlinear_norm(f: &StField) -> Result<f64> {
    Ok(SumCosts::compute(f, SumSpace::Nonlinear)?.greedy(-1.0).0)
}

fn z_consistent(costs: &SumCosts<f64>, betas: &[f64]) -> Result<bool> {
    let s1 = costs.greedy(-1.0).0;
    let mut last = f64::INFINITY;
    let mut ok = true;
    for &b in betas {
        let (z, _) = z_beta_from_costs(costs, b)?;
        ok &= z <= last && z <= s1;
        last = z;
    }
    Ok(ok)
}

/// `d/dx (u v)` slice by slice with the 3/2-rule.
pub fn derivative_of_product(u: &StField, v: &StField) -> Result<StField> {
    if u.tgrid() != v.tgrid() || u.xgrid() != v.xgrid() {
        return Err(Error::InvalidArgument("factors live on different grids".into()));
    }
    let ws = ProductWorkspace::new(*u.xgrid());
    let su = u.time_slices();
    let sv = v.time_slices();
    let out: Vec<Vec<Cplx<f64>>> = su.iter().zip(&sv).map(|(a, b)| ws.derivative_of_product(a, b, 1.0)).collect();
    SpaceTimeField::from_time_slices(*u.tgrid(), *u.xgrid(), &out, u.is_real() && v.is_real())
}

/// `(sum_L [L^{1/2} ||Q_L u||_{L^2}]^2)^{1/2}`.
fn modulation_energy(u: &StField) -> f64 {
    let lr = u.modulation_range();
    let nt = u.tgrid().n_steps();
    let l0 = lr.lo.0;
    let mut acc = vec![0.0; lr.len()];
    for (idx, c) in u.coeffs().iter().enumerate() {
        let e = c.norm_sqr();
        for (b, w) in lr.weights_at(u.tgrid().sigma(idx % nt)) {
            acc[(b.0 - l0) as usize] += w * w * e;
        }
    }
    let meas = u.measure();
    lr.blocks().zip(acc).map(|(l, a)| l.value_f64() * a * meas).sum::<f64>().sqrt()
}

/// Compact support in the open window: the field vanishes at the window edge, and, when
/// `support` is given, at every node with `|t| > support`.
fn check_support(id: AuditId, u: &StField, support: Option<f64>) -> Result<()> {
    let slices = u.slice_fields();
    let norms: Vec<f64> = slices.iter().map(|s| s.l2_norm()).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let nodes = u.tgrid().periodic_nodes();
    let tol = 1e-12 * top;
    let edge = norms[0] > tol;
    let outside = support.and_then(|s| nodes.iter().zip(&norms).find(|(t, n)| t.abs() > s * (1.0 + 1e-12) && **n > tol).map(|(t, _)| *t));
    if edge {
        return Err(Error::Hypothesis { id: id.name().into(), reason: "sample does not vanish at the edge of the time window".into() });
    }
    if let Some(t) = outside {
        return Err(Error::Hypothesis {
            id: id.name().into(),
            reason: format!("sample is nonzero at t = {t:.4}, outside the support [-{0}, {0}]", support.unwrap()),
        });
    }
    Ok(())
}

fn restrict(u: StField, support: Option<f64>, g: &AuditGrids) -> Result<StField> {
    match support {
        None => Ok(u),
        Some(t_sup) => {
            let slices: Vec<Vec<Cplx<f64>>> = u
                .time_slices()
                .into_iter()
                .zip(g.t.periodic_nodes())
                .map(|(s, t)| {
                    let w = eta(2.0 * t / t_sup);
                    s.into_iter().map(|c| c * w).collect()
                })
                .collect();
            SpaceTimeField::from_time_slices(g.t, g.x, &slices, u.is_real())
        }
    }
}

/// Frequency blocks below this share of the sample are roundoff and left out.
const NEGLIGIBLE_BLOCK: f64 = 1e-8;

/// Blocks below this share may fail the modulation resolution check; they are counted as
/// unresolved instead of aborting the audit. High blocks of solver outputs carry
/// multilinear content whose modulation exceeds the time grid.
const UNRESOLVED_BLOCK: f64 = 1e-4;

fn block_costs(p: &StField, total: f64) -> Result<Option<SumCosts<f64>>> {
    match resolution_costs(p) {
        Ok(c) => Ok(Some(c)),
        Err(Error::Resolution { .. }) if p.l2_norm() < UNRESOLVED_BLOCK * total => Ok(None),
        Err(e) => Err(e),
    }
}

fn measure(id: AuditId, recipe: &Recipe, g: &AuditGrids, cfg: &AuditConfig, support: Option<f64>) -> Result<Vec<Measurement>> {
    let plain = |lhs: f64, rhs: f64| Measurement { lhs, rhs, z_consistent: None, resolved: true };
    let field = |r: &StRecipe| -> Result<StField> {
        let u = restrict(r.realize(g, cfg)?, support, g)?;
        check_support(id, &u, support)?;
        Ok(u)
    };
    Ok(match (id, recipe) {
        (AuditId::Kato, Recipe::Datum(d)) => {
            let phi = d.realize(g, cfg)?;
            vec![plain(kato_ratio(&phi, &g.t) * phi.l2_norm(), phi.l2_norm())]
        }
        (AuditId::EstLin, Recipe::Datum(d)) => {
            let phi = d.realize(g, cfg)?;
            let u = SpaceTimeField::from_fn(g.t, g.x, |t| w_propagate(&phi, t, t).scale(eta(t)))?;
            let costs = resolution_costs(&u)?;
            vec![Measurement { lhs: costs.greedy(-1.0).0, rhs: sobolev_norm(&phi, -1.0), z_consistent: Some(z_consistent(&costs, &cfg.z_betas)?), resolved: true }]
        }
        (AuditId::LemXinfty, Recipe::Datum(d)) => {
            let phi = d.realize(g, cfg)?;
            let u = SpaceTimeField::from_fn(g.t, g.x, |t| airy_propagate(&phi, t).scale(eta(t)))?;
            vec![plain(modulation_energy(&u), phi.l2_norm())]
        }
        (AuditId::EstY0, Recipe::Single(r)) => {
            let u = field(r)?;
            let nr = u.frequency_range();
            let airy = l1l2_per_block(&u.airy_operator().time_slices(), u.xgrid(), &nr, u.tgrid().dt());
            let total = u.l2_norm();
            let mut out = Vec::new();
            for (n, lhs) in nr.blocks().zip(airy) {
                let p = u.project_n(n)?;
                if p.l2_norm() > NEGLIGIBLE_BLOCK * total {
                    out.push(plain(lhs, ysb_norm(&p, 0.0, 0.5)?.0));
                }
            }
            out
        }
        (AuditId::EstL2S1 | AuditId::EstLit | AuditId::EstL2l2, Recipe::Single(r)) => {
            let u = field(r)?;
            let costs = resolution_costs(&u)?;
            let z = Some(z_consistent(&costs, &cfg.z_betas)?);
            let (lhs, rhs) = match id {
                AuditId::EstL2S1 => (u.l2_norm(), costs.greedy(-1.0).0),
                AuditId::EstLit => (u.slice_fields().iter().map(|s| sobolev_norm(s, -1.0)).fold(0.0, f64::max), costs.greedy(-1.0).0),
                _ => (modulation_energy(&u), costs.greedy(0.0).0),
            };
            vec![Measurement { lhs, rhs, z_consistent: z, resolved: true }]
        }
        (AuditId::EstSmooth, Recipe::Single(r)) => {
            let u = field(r)?;
            let total = u.l2_norm();
            let mut out = Vec::new();
            for n in u.frequency_range().blocks() {
                let p = u.project_n(n)?;
                if p.l2_norm() <= NEGLIGIBLE_BLOCK * total {
                    continue;
                }
                let sup = mixed_norm_samples(&p.physical(), g.t.dt(), g.x.dx(), Exponent::Infinity, Exponent::Two, MixedOrder::TimeInner);
                match block_costs(&p, total)? {
                    Some(c) => out.push(plain(n.value_f64() * sup, c.greedy(0.0).0)),
                    None => out.push(Measurement::UNRESOLVED),
                }
            }
            out
        }
        (AuditId::EstLinNhom, Recipe::Single(r)) => {
            let f = field(r)?;
            let lf = extended_duhamel_spacetime(&f)?;
            vec![plain(resolution_costs(&lf)?.greedy(-1.0).0, nonlinear_norm(&f)?)]
        }
        (AuditId::Strichartz, Recipe::Single(r)) => {
            let f = field(r)?;
            let damped = f.apply_real_multiplier(|sigma, _| bracket(sigma).powf(-0.125));
            vec![plain(damped.l2_norm(), f.l2_norm())]
        }
        (AuditId::EstBil | AuditId::EstBil3, Recipe::Pair(a, b)) => {
            let (u, v) = (field(a)?, field(b)?);
            let (cu, cv) = (resolution_costs(&u)?, resolution_costs(&v)?);
            let lhs = nonlinear_norm(&derivative_of_product(&u, &v)?)?;
            let su = cu.greedy(if id == AuditId::EstBil3 { 0.0 } else { -1.0 }).0;
            let z = z_consistent(&cu, &cfg.z_betas)? && z_consistent(&cv, &cfg.z_betas)?;
            vec![Measurement { lhs, rhs: su * cv.greedy(-1.0).0, z_consistent: Some(z), resolved: true }]
        }
        (AuditId::BilZ, Recipe::Pair(a, b)) => {
            let (u, v) = (field(a)?, field(b)?);
            let (cu, cv) = (resolution_costs(&u)?, resolution_costs(&v)?);
            let out = resolution_costs(&extended_duhamel_spacetime(&derivative_of_product(&u, &v)?)?)?;
            cfg.z_betas
                .iter()
                .map(|&beta| {
                    let z = |c: &SumCosts<f64>| z_beta_from_costs(c, beta).map(|r| r.0);
                    Ok(plain(z(&out)?, z(&cu)? * z(&cv)?))
                })
                .collect::<Result<_>>()?
        }
        _ => unreachable!("sample kind matches the audit input"),
    })
}

/// Largest ratio of each class at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRatio {
    pub class: SampleClass,
    pub max_ratio: f64,
    pub max_ratio_doubled: Option<f64>,
}

/// Fitted power of `T` in the largest ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFit {
    pub t_values: Vec<f64>,
    pub max_ratios: Vec<f64>,
    pub exponent: f64,
}

/// `Z_beta` product ratio per `beta`, with the growth of its increments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScaling {
    pub time_support: f64,
    pub betas: Vec<f64>,
    pub max_ratios: Vec<f64>,
    /// `(R(b_{i+2}) - R(b_{i+1})) / (R(b_{i+1}) - R(b_i))`; a `beta^2` term gives 4 for
    /// doubling `beta`.
    pub increment_growth: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub id: AuditId,
    pub sample_count: usize,
    /// Samples with both sides zero, left out of the maximum.
    pub skipped: usize,
    /// Negligible frequency blocks whose modulation the time grid does not resolve.
    pub unresolved: usize,
    pub max_ratio: f64,
    pub max_ratio_doubled: Option<f64>,
    /// `max_ratio_doubled / max_ratio - 1`.
    pub growth: Option<f64>,
    pub ceiling: f64,
    pub per_class: Vec<ClassRatio>,
    pub time_fit: Option<TimeFit>,
    pub z_scaling: Option<ZScaling>,
    /// Every `Z_beta` evaluation along the way was monotone in `beta` and below `S^{-1}`.
    pub z_monotone: Option<bool>,
    /// `None` for report-only audits.
    pub pass: Option<bool>,
}

struct Sweep {
    per_class: Vec<f64>,
    count: usize,
    skipped: usize,
    unresolved: usize,
    z: Option<bool>,
    /// Maxima per position inside a measurement vector (used by the `beta` sweep).
    by_slot: Vec<f64>,
}

fn sweep(id: AuditId, cfg: &AuditConfig, g: &AuditGrids, support: Option<f64>) -> Result<Sweep> {
    let mut per_class = Vec::new();
    let mut count = 0;
    let mut skipped = 0;
    let mut unresolved = 0;
    let mut z: Option<bool> = None;
    let mut by_slot: Vec<f64> = Vec::new();
    for class in SampleClass::ALL {
        let recipes = draw_samples(id, class, cfg);
        let results: Vec<Result<Vec<Measurement>>> = recipes.par_iter().map(|r| measure(id, r, g, cfg, support)).collect();
        let mut best: f64 = 0.0;
        for res in results {
            for (slot, m) in res?.into_iter().enumerate() {
                if !m.resolved {
                    unresolved += 1;
                    continue;
                }
                if let Some(flag) = m.z_consistent {
                    z = Some(z.unwrap_or(true) && flag);
                }
                match m.ratio() {
                    Some(r) => {
                        count += 1;
                        best = best.max(r);
                        if by_slot.len() <= slot {
                            by_slot.resize(slot + 1, 0.0);
                        }
                        by_slot[slot] = by_slot[slot].max(r);
                    }
                    None if m.lhs == 0.0 => skipped += 1,
                    None => return Err(Error::DegenerateRatio { id: id.name().into(), lhs: m.lhs }),
                }
            }
        }
        per_class.push(best);
    }
    Ok(Sweep { per_class, count, skipped, unresolved, z, by_slot })
}

/// Runs one audit: base and doubled resolution, plus the `T` sweep when the estimate has
/// a power of `T`.
pub fn inequality_audit(id: AuditId, cfg: &AuditConfig) -> Result<RatioReport> {
    cfg.validate()?;
    let base = cfg.grids()?;
    let fine = base.refined();
    if id == AuditId::BilZ {
        let s = sweep(id, cfg, &base, Some(cfg.z_time))?;
        let increment_growth = s
            .by_slot
            .windows(3)
            .map(|w| (w[2] - w[1]) / (w[1] - w[0]))
            .collect();
        let max_ratio = s.per_class.iter().cloned().fold(0.0, f64::max);
        return Ok(RatioReport {
            id,
            sample_count: s.count,
            skipped: s.skipped,
            unresolved: s.unresolved,
            max_ratio,
            max_ratio_doubled: None,
            growth: None,
            ceiling: cfg.growth_ceiling,
            per_class: SampleClass::ALL
                .iter()
                .zip(&s.per_class)
                .map(|(&class, &m)| ClassRatio { class, max_ratio: m, max_ratio_doubled: None })
                .collect(),
            time_fit: None,
            z_scaling: Some(ZScaling { time_support: cfg.z_time, betas: cfg.z_betas.clone(), max_ratios: s.by_slot, increment_growth }),
            z_monotone: None,
            pass: None,
        });
    }
    if id.is_time_dependent() {
        let mut maxima = Vec::new();
        let mut count = 0;
        let mut skipped = 0;
        let mut unresolved = 0;
        let mut per_class = Vec::new();
        let mut z = None;
        for &t in &cfg.t_values {
            let s = sweep(id, cfg, &base, Some(t))?;
            count += s.count;
            skipped += s.skipped;
            unresolved += s.unresolved;
            if per_class.is_empty() {
                per_class = s.per_class.clone();
            }
            z = merge(z, s.z);
            maxima.push(s.per_class.iter().cloned().fold(0.0, f64::max));
        }
        let exponent = loglog_slope(&cfg.t_values, &maxima);
        let max_ratio = maxima.iter().cloned().fold(0.0, f64::max);
        let pass = maxima.iter().all(|m| m.is_finite()) && exponent > 0.0 && z.unwrap_or(true);
        return Ok(RatioReport {
            id,
            sample_count: count,
            skipped,
            unresolved,
            max_ratio,
            max_ratio_doubled: None,
            growth: None,
            ceiling: cfg.growth_ceiling,
            per_class: SampleClass::ALL
                .iter()
                .zip(&per_class)
                .map(|(&class, &m)| ClassRatio { class, max_ratio: m, max_ratio_doubled: None })
                .collect(),
            time_fit: Some(TimeFit { t_values: cfg.t_values.clone(), max_ratios: maxima, exponent }),
            z_scaling: None,
            z_monotone: z,
            pass: Some(pass),
        });
    }
    let a = sweep(id, cfg, &base, None)?;
    let b = sweep(id, cfg, &fine, None)?;
    let max_a = a.per_class.iter().cloned().fold(0.0, f64::max);
    let max_b = b.per_class.iter().cloned().fold(0.0, f64::max);
    let growth = max_b / max_a - 1.0;
    let z = merge(a.z, b.z);
    let pass = max_a.is_finite() && max_b.is_finite() && growth < cfg.growth_ceiling && z.unwrap_or(true);
    Ok(RatioReport {
        id,
        sample_count: a.count,
        skipped: a.skipped,
        unresolved: a.unresolved + b.unresolved,
        max_ratio: max_a,
        max_ratio_doubled: Some(max_b),
        growth: Some(growth),
        ceiling: cfg.growth_ceiling,
        per_class: SampleClass::ALL
            .iter()
            .zip(a.per_class.iter().zip(&b.per_class))
            .map(|(&class, (&m, &d))| ClassRatio { class, max_ratio: m, max_ratio_doubled: Some(d) })
            .collect(),
        time_fit: None,
        z_scaling: None,
        z_monotone: z,
        pass: Some(pass),
    })
}

fn merge(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x && y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AuditConfig {
        AuditConfig { samples_per_class: 2, n_modes: 32, half_length: 2.0 * std::f64::consts::PI, n_steps: 256, max_frequency: 3.0, ..Default::default() }
    }

    #[test]
    fn ids_roundtrip_through_names() {
        for id in AuditId::ALL {
            assert_eq!(id.name().parse::<AuditId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.name()));
        }
        assert!("est-nothing".parse::<AuditId>().is_err());
    }

    #[test]
    fn samples_are_seeded() {
        let cfg = small();
        for class in SampleClass::ALL {
            assert_eq!(draw_samples(AuditId::EstBil, class, &cfg), draw_samples(AuditId::EstBil, class, &cfg));
        }
        let other = AuditConfig { seed: 1, ..small() };
        assert_ne!(draw_samples(AuditId::EstL2S1, SampleClass::FreeWaves, &cfg), draw_samples(AuditId::EstL2S1, SampleClass::FreeWaves, &other));
    }

    #[test]
    fn samples_are_real_and_windowed() {
        let cfg = small();
        let g = cfg.grids().unwrap();
        for class in SampleClass::ALL {
            for r in draw_samples(AuditId::EstL2S1, class, &cfg) {
                let Recipe::Single(r) = r else { unreachable!() };
                let u = r.realize(&g, &cfg).unwrap();
                assert!(u.hermitian_defect() < 1e-10, "{class:?}");
                check_support(AuditId::EstL2S1, &u, None).unwrap();
            }
        }
    }

    #[test]
    fn support_hypothesis_is_enforced() {
        let cfg = small();
        let g = cfg.grids().unwrap();
        let Recipe::Single(r) = &draw_samples(AuditId::Strichartz, SampleClass::FreeWaves, &cfg)[0] else { unreachable!() };
        let u = r.realize(&g, &cfg).unwrap();
        assert!(matches!(check_support(AuditId::Strichartz, &u, Some(0.25)), Err(Error::Hypothesis { .. })));
        let v = restrict(u, Some(0.25), &g).unwrap();
        check_support(AuditId::Strichartz, &v, Some(0.25)).unwrap();
    }

    #[test]
    fn l2_embedding_audit_is_stable() {
        let rep = inequality_audit(AuditId::EstL2S1, &small()).unwrap();
        assert_eq!(rep.sample_count, 6);
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        assert!(rep.growth.unwrap().abs() < 0.1, "{rep:?}");
        assert_eq!(rep.z_monotone, Some(true));
    }

    #[test]
    fn zero_sides_are_skipped_and_degenerate_ones_reported() {
        let m = Measurement { lhs: 0.0, rhs: 0.0, z_consistent: None, resolved: true };
        assert!(m.ratio().is_none());
        let m = Measurement { lhs: 1.0, rhs: 2.0, z_consistent: None, resolved: true };
        assert_eq!(m.ratio(), Some(0.5));
    }
}
