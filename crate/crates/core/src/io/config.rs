use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::duhamel::solver::SolverConfig;
use crate::error::{Error, Result};
use crate::illposed::{AmplitudeConvention, DiscontinuityConfig, InflationConfig};
use crate::norms::audit::AuditConfig;
use crate::norms::NormSpec;
use crate::spectral::grid::FrequencyGrid;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Solve,
    A2Experiment,
    Discontinuity,
    Norm,
    Audit,
    GridsSelfcheck,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Solve, Command::A2Experiment, Command::Discontinuity, Command::Norm, Command::Audit, Command::GridsSelfcheck];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::A2Experiment => "a2-experiment",
            Command::Discontinuity => "discontinuity",
            Command::Norm => "norm",
            Command::Audit => "audit",
            Command::GridsSelfcheck => "grids-selfcheck",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command `{s}`")))
    }
}

/// Periodic box used by `solve`, `norm` and `grids-selfcheck`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_modes: usize,
    pub half_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_modes: 4096, half_length: 256.0 * std::f64::consts::PI }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<FrequencyGrid<f64>> {
        FrequencyGrid::new(self.half_length, self.n_modes).map_err(|e| Error::Config { key: "grid".into(), message: e.to_string() })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumKind {
    Zero,
    /// `amplitude * exp(-(x / width)^2)`.
    #[default]
    Gaussian,
    /// Counterexample data on the block `N = 2^block`.
    PhiN,
    /// Band-limited random real datum drawn from the run seed, rescaled to `H^-1` size
    /// `amplitude`.
    Random,
    /// Spectral field file.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumConfig {
    pub kind: DatumKind,
    pub amplitude: f64,
    pub width: f64,
    pub block: i32,
    pub convention: AmplitudeConvention,
    /// Largest frequency of `random` data.
    pub max_frequency: f64,
    /// Field file read by `kind = "file"`.
    pub path: PathBuf,
}

impl Default for DatumConfig {
    fn default() -> Self {
        Self {
            kind: DatumKind::Gaussian,
            amplitude: 0.01,
            width: 2.0,
            block: 4,
            convention: AmplitudeConvention::Corrected,
            max_frequency: 2.0,
            path: PathBuf::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Final time. Beyond `solver.horizon` the local solver is restarted.
    pub t_end: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { t_end: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSource {
    /// `eta(t) W(t, t) u0`.
    #[default]
    Linear,
    /// Fixed point of the windowed Duhamel map with datum `u0`.
    FixedPoint,
}

/// Space-time field fed to `norm`, on the window `[-2, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceTimeConfig {
    pub source: FieldSource,
    pub n_steps: usize,
}

impl Default for SpaceTimeConfig {
    fn default() -> Self {
        Self { source: FieldSource::Linear, n_steps: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Rerun on a doubled box and compare the reported norms.
    pub selfcheck: bool,
    /// Largest relative change accepted by the box-doubling check.
    pub selfcheck_tolerance: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("kdvb-out"), selfcheck: true, selfcheck_tolerance: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub grid: GridConfig,
    pub datum: DatumConfig,
    pub solve: SolveConfig,
    pub solver: SolverConfig,
    pub spacetime: SpaceTimeConfig,
    pub norm: NormSpec,
    pub inflation: InflationConfig,
    pub discontinuity: DiscontinuityConfig,
    pub audit: AuditConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            seed: 2024,
            grid: GridConfig::default(),
            datum: DatumConfig::default(),
            solve: SolveConfig::default(),
            solver: SolverConfig::default(),
            spacetime: SpaceTimeConfig::default(),
            norm: NormSpec::default(),
            inflation: InflationConfig::default(),
            discontinuity: DiscontinuityConfig::default(),
            audit: AuditConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Short flags accepted next to dotted keys.
const ALIASES: [(&str, &str); 4] = [("id", "audit.ids"), ("samples", "audit.samples_per_class"), ("out", "output.dir"), ("output", "output.dir")];

impl RunConfig {
    /// Reads an optional TOML file and applies `key = value` overrides on top, in order.
    pub fn load(command: Command, file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config { key: "config".into(), message: format!("cannot read {}: {e}", path.display()) })?;
                text.parse::<Table>().map_err(|e| Error::Config { key: "config".into(), message: e.to_string() })?
            }
            None => Table::new(),
        };
        let defaults = defaults_table();
        for (key, raw) in overrides {
            let key = ALIASES.iter().find(|(a, _)| a == key).map_or(key.as_str(), |(_, k)| k);
            let path: Vec<&str> = key.split('.').collect();
            let value = parse_override(raw, lookup(&defaults, &path));
            insert(&mut table, &path, value).map_err(|message| Error::Config { key: key.to_string(), message })?;
        }
        table.insert("command".into(), Value::String(command.name().into()));
        Self::from_table(table)
    }

    pub fn from_table(table: Table) -> Result<Self> {
        let defaults = defaults_table();
        let mut leaves = Vec::new();
        collect_leaves(&table, &defaults, &mut Vec::new(), &mut leaves)?;
        let cfg: RunConfig = match Value::Table(table.clone()).try_into() {
            Ok(cfg) => cfg,
            Err(e) => return Err(locate_type_error(&table, &defaults, &leaves, e)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        let bad = |key: &str, message: String| Err(Error::Config { key: key.into(), message });
        let d = &self.datum;
        if !d.amplitude.is_finite() {
            return bad("datum.amplitude", "must be finite".into());
        }
        if d.kind == DatumKind::Gaussian && !(d.width > 0.0) {
            return bad("datum.width", format!("must be positive, got {}", d.width));
        }
        if d.kind == DatumKind::File && !d.path.is_file() {
            return bad("datum.path", format!("no such file: {}", d.path.display()));
        }
        if d.kind == DatumKind::Random && !(d.max_frequency > 0.0) {
            return bad("datum.max_frequency", "must be positive".into());
        }
        if !(self.solve.t_end > 0.0 && self.solve.t_end.is_finite()) {
            return bad("solve.t_end", format!("must be positive, got {}", self.solve.t_end));
        }
        if self.spacetime.n_steps < 8 {
            return bad("spacetime.n_steps", "need at least 8 steps".into());
        }
        if !(self.output.selfcheck_tolerance > 0.0) {
            return bad("output.selfcheck_tolerance", "must be positive".into());
        }
        self.solver.validate()?;
        self.norm.validate()?;
        self.inflation.validate()?;
        self.discontinuity.validate()?;
        self.audit.validate()
    }

    /// The audit configuration with the run seed.
    pub fn audit_config(&self) -> AuditConfig {
        AuditConfig { seed: self.seed, ..self.audit.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

fn defaults_table() -> Table {
    match Value::try_from(RunConfig::default()).expect("defaults serialise") {
        Value::Table(t) => t,
        _ => unreachable!("a struct serialises to a table"),
    }
}

fn lookup<'a>(table: &'a Table, path: &[&str]) -> Option<&'a Value> {
    let (last, head) = path.split_last()?;
    let mut cur = table;
    for p in head {
        cur = cur.get(*p)?.as_table()?;
    }
    cur.get(*last)
}

/// Tagged tables (`kind = ...`) change their fields with the tag; only the tag is checked.
fn is_tagged(v: &Value) -> bool {
    v.as_table().is_some_and(|t| t.contains_key("kind") && t.len() > 1)
}

fn collect_leaves(user: &Table, defaults: &Table, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) -> Result<()> {
    for (k, v) in user {
        prefix.push(k.clone());
        let Some(default) = defaults.get(k) else {
            let key = prefix.join(".");
            return Err(Error::Config { key, message: "unknown key".into() });
        };
        match (v, default) {
            (Value::Table(sub), Value::Table(dsub)) if !is_tagged(default) => collect_leaves(sub, dsub, prefix, out)?,
            _ => out.push(prefix.clone()),
        }
        prefix.pop();
    }
    Ok(())
}

/// Finds the first user key that does not deserialise when set alone on the defaults.
fn locate_type_error(user: &Table, defaults: &Table, leaves: &[Vec<String>], fallback: toml::de::Error) -> Error {
    for leaf in leaves {
        let path: Vec<&str> = leaf.iter().map(String::as_str).collect();
        let Some(value) = lookup(user, &path) else { continue };
        let mut probe = defaults.clone();
        if insert(&mut probe, &path, value.clone()).is_err() {
            continue;
        }
        if let Err(e) = Value::Table(probe).try_into::<RunConfig>() {
            return Error::Config { key: leaf.join("."), message: e.message().to_string() };
        }
    }
    Error::Config { key: "config".into(), message: fallback.to_string() }
}

fn parse_override(raw: &str, like: Option<&Value>) -> Value {
    let parsed = format!("v = {raw}").parse::<Table>().ok().and_then(|mut t| t.remove("v"));
    match (parsed, like) {
        (Some(v @ Value::Array(_)), _) => v,
        (_, Some(Value::Array(items))) => {
            Value::Array(raw.split(',').map(|p| parse_override(p.trim(), items.first())).collect())
        }
        (Some(Value::Integer(i)), Some(Value::Float(_))) => Value::Float(i as f64),
        (Some(v), _) => v,
        (None, _) => Value::String(raw.to_string()),
    }
}

fn insert(table: &mut Table, path: &[&str], value: Value) -> std::result::Result<(), String> {
    let (last, head) = path.split_last().ok_or("empty key")?;
    let mut cur = table;
    for p in head {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| format!("`{p}` is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
