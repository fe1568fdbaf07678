use std::path::PathBuf;

use screening_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// IO and other runtime failures.
    pub const FAILURE: u8 = 1;
    /// Bad flags, malformed input files, budgets outside their domain.
    pub const INVALID: u8 = 2;
    /// The fixed point or the bisection did not converge.
    pub const NOT_CONVERGED: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{}:{line}: {msg}", path.display())]
    Malformed { path: PathBuf, line: u64, msg: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Malformed { .. } => exit::INVALID,
            CliError::Core(e) => match e {
                CoreError::NotConverged(_) | CoreError::BracketFailure { .. } => exit::NOT_CONVERGED,
                CoreError::DegenerateBand { .. } => exit::FAILURE,
                _ => exit::INVALID,
            },
            _ => exit::FAILURE,
        }
    }
}
