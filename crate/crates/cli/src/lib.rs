//! Experiment runners and table emission behind the `fas-edof` binary.

pub mod experiments;
pub mod grid;
pub mod table;

pub use experiments::{run_experiment, Experiment, Params};
pub use table::{emit, write_table, Column, ExperimentTable, Format};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] fas_edof::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
