use std::path::PathBuf;

use thiserror::Error;

use crate::tia::VisibilityEstimate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value violated a physical or structural invariant.
    #[error("validation failed for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("stream `{0}` is not sorted in ascending time order")]
    Unsorted(String),

    /// Counts carry no fringe information; the attached estimate has
    /// `v = 0` and an infinite `sigma_v`.
    #[error("fringe fit is degenerate: all normalized counts are equal")]
    FitDegenerate { estimate: Box<VisibilityEstimate> },

    #[error("fringe fit did not converge after {iterations} iterations")]
    FitNotConverged { iterations: usize },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::Validation { .. } | Error::InvalidInput(_) | Error::Parse { .. }
        )
    }

    pub fn is_degenerate_fit(&self) -> bool {
        matches!(self.root(), Error::FitDegenerate { .. })
    }
}
