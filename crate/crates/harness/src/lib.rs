//! Benchmark harness for the `arcs` solvers: TOML experiment configs,
//! reference optima, CSV metrics, gnuplot scripts and the `arcs-bench` CLI.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod reference;

use std::io;
use std::path::{Path, PathBuf};

use arcs::lmo::LmoError;
use arcs::solvers::SolverError;
use arcs::ProblemError;
use thiserror::Error;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ExperimentOutput};
pub use reference::compute_reference_optimum;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid configuration; `path` names the offending field.
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("bad dataset {}: {msg}", file.display())]
    Data { file: PathBuf, msg: String },
    #[error("{}: {source}", file.display())]
    Io { file: PathBuf, source: io::Error },
    #[error("writing {}: {msg}", file.display())]
    Output { file: PathBuf, msg: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl HarnessError {
    pub fn io(file: &Path, source: io::Error) -> Self {
        HarnessError::Io { file: file.to_path_buf(), source }
    }

    /// 1 for configuration and input errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Data { .. } => 1,
            _ => 2,
        }
    }
}

impl From<ProblemError> for HarnessError {
    fn from(e: ProblemError) -> Self {
        HarnessError::Solver(e.into())
    }
}

impl From<LmoError> for HarnessError {
    fn from(e: LmoError) -> Self {
        HarnessError::Solver(e.into())
    }
}
