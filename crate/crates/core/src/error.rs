//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library.
///
/// The variants split into two families that the command-line front end maps
/// to distinct exit codes: validation problems with the caller's input, and
/// numerical failures discovered while computing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("ill-posed configuration: {0}")]
    IllPosed(String),
    #[error("embedding violation at frequency {frequency:?}: {detail}")]
    EmbeddingViolation { frequency: Vec<f64>, detail: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("diagnostic: {0}")]
    Diagnostic(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for validation errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Precondition(_)
            | Error::Unsupported(_)
            | Error::Configuration(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
            Error::IllPosed(_)
            | Error::EmbeddingViolation { .. }
            | Error::Numerical(_)
            | Error::Diagnostic(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        invalid(format!("{what}: expected dimension {expected}, got {got}"))
    }
}
