use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building or running a simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// The scenario or grid configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// An influence matrix failed validation.
    #[error("invalid influence matrix: {0}")]
    Matrix(String),

    #[error("landscape has {n} decisions, above the enumeration cap of {cap}; disable normalization (normalize = false) to run it")]
    EnumerationCap { n: usize, cap: usize },

    #[error("cannot take the mean over an empty decision subset")]
    EmptySubset,

    #[error("decision index {index} out of range for {n} decisions")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("modularity is undefined: {0}")]
    Modularity(String),

    #[error("empty sample")]
    EmptySample,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    /// Broken internal invariant (overlapping portfolios, flips outside a portfolio, ...).
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors the CLI reports as configuration errors (exit code 1).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Matrix(_) | Error::EnumerationCap { .. } | Error::UnknownVariable(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
