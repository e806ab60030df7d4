//! Errors of the command layer and their exit codes.

use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Config = 1,
    Infeasible = 2,
    Solver = 3,
    Check = 4,
    Selection = 5,
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("parameter selection: {0}")]
    Selection(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            LabError::Config(_) | LabError::Io(_) => ExitCode::Config,
            LabError::Infeasible(_) => ExitCode::Infeasible,
            LabError::Solver(_) => ExitCode::Solver,
            LabError::Check(_) => ExitCode::Check,
            LabError::Selection(_) => ExitCode::Selection,
        }
    }
}
