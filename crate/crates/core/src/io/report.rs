use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::config::{Command, RunConfig};

/// One PASS/FAIL line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    /// Name of the acceptance criterion the flag belongs to.
    pub criterion: String,
    pub pass: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn new(criterion: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { criterion: criterion.into(), pass, detail: detail.into() }
    }
}

/// Rerun of an experiment on a changed grid, compared on its reported norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub max_relative_change: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SelfCheck {
    pub fn new(name: impl Into<String>, max_relative_change: f64, tolerance: f64) -> Self {
        Self { name: name.into(), max_relative_change, tolerance, pass: max_relative_change < tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub code_version: String,
    pub selfchecks: Vec<SelfCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub command: Command,
    pub config: RunConfig,
    /// Tables, fitted exponents and measured constants of the command.
    pub results: serde_json::Value,
    pub criteria: Vec<CriterionOutcome>,
    pub provenance: RunProvenance,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(config: &RunConfig, results: serde_json::Value, mut criteria: Vec<CriterionOutcome>, selfchecks: Vec<SelfCheck>) -> Self {
        for c in &selfchecks {
            criteria.push(CriterionOutcome::new(
                "domain-truncation",
                c.pass,
                format!("{}: relative change {:.3e} (tolerance {:.1e})", c.name, c.max_relative_change, c.tolerance),
            ));
        }
        let pass = criteria.iter().all(|c| c.pass);
        Self {
            command: config.command,
            config: config.clone(),
            results,
            criteria,
            provenance: RunProvenance { code_version: env!("CARGO_PKG_VERSION").into(), selfchecks },
            pass,
        }
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.criteria.iter().map(|c| format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.criterion, c.detail)).collect()
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self { name: name.into(), contents: contents.into() }
    }
}

/// Two-column curve for external plotting.
pub fn plot_data(title: &str, columns: (&str, &str), points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("# {title}\n# {} {}\n", columns.0, columns.1);
    for (x, y) in points {
        out.push_str(&format!("{x:.17e} {y:.17e}\n"));
    }
    out
}

/// Gnuplot script drawing every `plot-*.dat` artifact to a PNG next to it.
pub fn plot_script(artifacts: &[Artifact]) -> String {
    let mut out = String::from("# generated by kdvb; run with `gnuplot plot.gp` inside the output directory\nset terminal pngcairo size 800,600\nset grid\n");
    for a in artifacts.iter().filter(|a| a.name.starts_with("plot-") && a.name.ends_with(".dat")) {
        let stem = a.name.trim_end_matches(".dat");
        let mut header = a.contents.lines().take(2).map(|l| l.trim_start_matches('#').trim());
        let title = header.next().unwrap_or(stem);
        let axes: Vec<&str> = header.next().unwrap_or("x y").split_whitespace().collect();
        let positive = a.contents.lines().filter(|l| !l.starts_with('#')).all(|l| {
            l.split_whitespace().filter_map(|v| v.parse::<f64>().ok()).all(|v| v > 0.0)
        });
        out.push_str(&format!("set output '{stem}.png'\nset title '{title}'\n"));
        out.push_str(&format!("set xlabel '{}'\nset ylabel '{}'\n", axes.first().unwrap_or(&"x"), axes.get(1).unwrap_or(&"y")));
        out.push_str(if positive { "set logscale xy\n" } else { "unset logscale\n" });
        out.push_str(&format!("plot '{}' using 1:2 with linespoints title '{stem}'\n", a.name));
    }
    out
}

/// Writes `contents` to `path` through a temporary file in the same directory, so the final
/// path never holds a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes the artifacts, the plotting script and `report.json` (last) into `dir`.
pub fn write_outputs(dir: &Path, report: &ExperimentReport, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        write_atomic(&path, a.contents.as_bytes())?;
        written.push(path);
    }
    if artifacts.iter().any(|a| a.name.starts_with("plot-")) {
        let path = dir.join("plot.gp");
        write_atomic(&path, plot_script(artifacts).as_bytes())?;
        written.push(path);
    }
    let path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}
