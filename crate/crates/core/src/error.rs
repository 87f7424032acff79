use std::path::PathBuf;

use crate::graph::Pose3;

/// Errors produced across the mapping and planning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("loop rejected: alignment residual {residual:.3} m exceeds {limit:.3} m")]
    RejectedLoop { residual: f64, limit: f64 },

    #[error("optimization failed after {iterations} iterations: {reason}")]
    OptimizationFailed {
        reason: String,
        iterations: usize,
        /// Last accepted iterate, indexed like the graph's nodes.
        last: Vec<(usize, Pose3)>,
    },

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("size limit: {0}")]
    SizeLimit(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}

pub(crate) fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}
