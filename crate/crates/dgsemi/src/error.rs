use std::io;
use std::path::PathBuf;

use dgsemi_core::adapt::AdaptFailure;
use dgsemi_core::harness::LevelError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("vtk: {0}")]
    Vtk(String),
    #[error(transparent)]
    Core(#[from] dgsemi_core::Error),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Adapt(#[from] AdaptFailure),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// True for failures of the nonlinear or linear solver.
    pub fn is_solver_failure(&self) -> bool {
        use dgsemi_core::Error as E;
        let core = match self {
            Error::Core(e) => e,
            Error::Level(e) => &e.error,
            Error::Adapt(e) => &e.error,
            _ => return false,
        };
        matches!(core, E::NonConvergence(_) | E::LinearSolveFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
