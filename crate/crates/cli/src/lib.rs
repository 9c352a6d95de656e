//! Batch experiment runner: parses run configurations, executes training and
//! overestimation studies across seeds, variants, and δ values, persists
//! plot-ready CSV data, and summarizes finished runs.

mod config;
mod runner;
mod summary;

pub use config::{
    Experiment, NoiseSection, OverestSection, RunConfig, TrainSection, VariantSpec,
};
pub use runner::{run, CellRecord, RunManifest, RunOptions, RunReport};
pub use summary::{summarize, SummaryReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("run directory has problems:\n{}", .0.join("\n"))]
    CorruptRun(Vec<String>),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything that failed at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::CorruptRun(_) => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Runtime(format!("io error at {}: {source}", path.as_ref().display()))
    }
}
