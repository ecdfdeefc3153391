use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kdvb_core::io::{configure_threads, run_and_write, Command, RunConfig};

/// Spectral laboratory for the KdV-Burgers equation.
///
/// Every run writes report.json, CSV tables, plot-*.dat curves and a gnuplot script into
/// the output directory (`--output.dir`, default `kdvb-out`). Settings come from the
/// defaults, then the `--config` file, then `--section.key value` overrides in order.
/// KDVB_THREADS caps the worker threads. The exit status is 0 when every criterion passes,
/// 1 when one fails and 2 on errors.
#[derive(Debug, Parser)]
#[command(name = "kdvb", version)]
struct Cli {
    /// solve | a2-experiment | discontinuity | norm | audit | grids-selfcheck
    #[arg(value_parser = parse_command)]
    command: Command,

    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides such as `--grid.n_modes 2048`; `--id` and `--samples` select audits
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse().map_err(|e: kdvb_core::Error| e.to_string())
}

/// Splits `--key value` and `--key=value` words into pairs; `--config` is pulled out.
fn pairs(words: &[String], config: &mut Option<PathBuf>) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut it = words.iter();
    while let Some(word) = it.next() {
        let Some(flag) = word.strip_prefix("--") else {
            return Err(format!("expected `--key value`, found `{word}`"));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| format!("missing value for `--{flag}`"))?;
                (flag.to_string(), v.clone())
            }
        };
        if key == "config" {
            *config = Some(PathBuf::from(value));
        } else {
            out.push((key, value));
        }
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<bool, String> {
    let mut config = cli.config;
    let overrides = pairs(&cli.overrides, &mut config)?;
    configure_threads().map_err(|e| e.to_string())?;
    let cfg = RunConfig::load(cli.command, config.as_deref(), &overrides).map_err(|e| e.to_string())?;
    let report = run_and_write(&cfg).map_err(|e| e.to_string())?;
    for line in report.summary_lines() {
        println!("{line}");
    }
    println!("report written to {}", cfg.output.dir.join("report.json").display());
    Ok(report.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kdvb: error: {e}");
            ExitCode::from(2)
        }
    }
}
