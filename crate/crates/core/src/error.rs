use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates an integrity constraint (duplicates, unknown ids, bad scale).
    #[error("data integrity: {0}")]
    DataIntegrity(String),

    /// A numeric argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration; `param` names the offending parameter.
    #[error("invalid configuration for `{param}`: {message}")]
    Config { param: String, message: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("grouping strategy error: {0}")]
    Strategy(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("missing input file {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(param: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            param: param.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DataIntegrity(_) => "data_integrity",
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::Capacity(_) => "capacity",
            Error::Usage(_) => "usage",
            Error::Strategy(_) => "strategy",
            Error::Split(_) => "split",
            Error::MissingFile { .. } => "missing_file",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Internal(_) => "internal",
        }
    }
}
