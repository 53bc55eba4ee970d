use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report, grouped by category so the CLI can
/// map them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    Dimension {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value produced by node {node} ({op})")]
    Numeric { node: usize, op: &'static str },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("corrupt cache: {0}")]
    Corruption(String),

    #[error("cache format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Dimension {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short category label used in CLI diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension { .. } | Error::Domain(_) | Error::Contract(_) => "internal",
            Error::Numeric { .. } | Error::Divergence { .. } => "numeric",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Corruption(_) | Error::Version { .. } => "cache",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
