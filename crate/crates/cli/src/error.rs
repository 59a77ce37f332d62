use std::io;
use std::path::PathBuf;

use hitprob::{KernelError, McError, SolveError, SurfaceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Surface { path: PathBuf, source: SurfaceError },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Walk(#[from] McError),
    #[error("{0}")]
    Usage(String),
    /// The output was written but does not meet the pass criteria.
    #[error("{0}")]
    Policy(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => 3,
            CliError::Surface { .. } | CliError::Usage(_) => 1,
            CliError::Solve(e) => match e {
                SolveError::Singular { .. } => 2,
                SolveError::Kernel(k) => kernel_code(k),
                SolveError::InternalStart(..)
                | SolveError::EmptyWindow(..)
                | SolveError::BadWindow(_) => 1,
            },
            CliError::Kernel(k) => kernel_code(k),
            CliError::Walk(e) => match e {
                McError::InteriorVisit { .. } => 2,
                _ => 1,
            },
            CliError::Policy(_) => 2,
        }
    }
}

fn kernel_code(e: &KernelError) -> u8 {
    match e {
        KernelError::QuadratureFailure { .. } => 2,
        _ => 1,
    }
}
