//! Configuration loading, experiment orchestration and CSV emission behind the
//! `fockslit` binary.

pub mod config;
pub mod csv;
pub mod run;

use thiserror::Error;

pub use config::{validate_config, Diagnostic, Experiment, RunConfig};
pub use run::{execute, execute_with_threads, run, ResultBundle};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Diagnostic>),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub(crate) fn runtime(e: fockslit_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }

    /// 1 for configuration problems, 2 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) | CliError::Io(_) => 2,
        }
    }
}
