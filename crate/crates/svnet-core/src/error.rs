use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A row in an input file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    /// A value falls outside the observation calendar or another valid range.
    #[error("{0}")]
    Range(String),
    /// An invalid parameter combination was supplied.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An argument violates a function's domain.
    #[error("{0}")]
    Domain(String),
    /// The `provided` window policy found no window for an investor.
    #[error("no activity window provided for investor {0}")]
    MissingWindow(String),
    /// An operation that requires data received none.
    #[error("empty input: {0}")]
    EmptyInput(String),
    /// A request exceeds a hard limit (e.g. exhaustive search size).
    #[error("{0}")]
    Refused(String),
    #[error("unknown investor {0}")]
    UnknownInvestor(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A pipeline stage failed; wraps the underlying cause.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Name of the failing stage, if this is a stage error.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
