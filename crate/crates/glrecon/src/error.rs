//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error enum. Numerical routines are total on finite inputs;
/// errors signal contract violations (shape mismatches, invalid
/// configuration) or I/O failures, not convergence problems.
#[derive(Debug, Error)]
pub enum Error {
    /// Two containers that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),

    /// A metric is undefined for the given inputs (e.g. zero reference).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A stopping policy was asked for something it cannot provide.
    #[error("stopping policy error: {0}")]
    Policy(String),

    /// The iteration produced non-finite values.
    #[error("numerical divergence: {0}")]
    Diverged(String),

    /// File system failure while reading or writing artifacts.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed artifact file (PGM or CSV).
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
