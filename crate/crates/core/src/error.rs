use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside the domain of an operation (shape mismatch, bad index, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A size cap was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    /// The data is (numerically) degenerate for the requested operation.
    #[error("degenerate input: {0}")]
    Degeneracy(String),
    /// An iterative method did not reach its target.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// A required piece of configuration is missing or inconsistent.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// Malformed user input at the command-line or file-schema level.
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degeneracy(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain(_) | Error::Json(_) | Error::Configuration(_) => 2,
            Error::Convergence(_) => 3,
            Error::Degeneracy(_) => 4,
            Error::Resource(_) => 5,
            Error::Io(_) => 1,
        }
    }
}
