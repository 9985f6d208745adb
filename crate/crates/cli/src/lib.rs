//! Experiment driver for the corrugated-metric laboratory: flat key=value
//! configs, dyadic N sweeps, log-log rate fits, and CSV reports, behind the
//! `corrugate` command-line tool.

use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod rate;
pub mod report;

pub use config::Config;
pub use experiments::{run_experiment, ExperimentKind};
pub use rate::fit_rate;
pub use report::{parse_csv, Cell, ConvergenceReport, CsvTable};

/// Harness-level failures. Tolerance violations are not errors — they show
/// up as `passed = false` in the report.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("rate undefined: {0}")]
    RateUndefined(String),

    #[error(transparent)]
    Core(#[from] corrugate_core::CoreError),
}

impl HarnessError {
    /// CLI exit code: configuration and domain problems are 2.
    pub fn exit_code(&self) -> u8 {
        2
    }
}
