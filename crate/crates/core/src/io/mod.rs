//! Batch front end: configuration, command dispatch, reports and plot data.

pub mod config;
pub mod field_file;
pub mod report;
pub mod run;

pub use config::{Command, DatumKind, FieldSource, RunConfig};
pub use report::{Artifact, CriterionOutcome, ExperimentReport, SelfCheck};
pub use run::{configure_threads, run, run_and_write, RunOutput, THREADS_ENV};
