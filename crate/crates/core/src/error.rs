// SPDX-License-Identifier: MIT
//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building, identifying or estimating a model.
///
/// Variants fall into two families: *configuration* errors (malformed graphs,
/// violated preconditions, bad input files) and *numerical* errors (unstable
/// processes, near-singular systems). [`Error::is_numerical`] tells them apart,
/// which the command-line front-end maps onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// The lag structure violates one of the model assumptions.
    #[error("invalid lag structure: {0}")]
    InvalidGraph(String),

    /// Parameters are inconsistent with the lag structure they claim to follow.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A series has no self-lags, so residue classes are undefined.
    #[error("no residue classes: series {0} has no self-lags")]
    NoResidueClasses(String),

    /// The latent ancestry of the target/future set is not blocked by the basis set.
    #[error("unbounded latent ancestry: {0}")]
    UnboundedAncestry(String),

    /// A bounded graph search would have to leave its window to answer exactly.
    #[error("search window of {window} time steps exceeded: {context}")]
    WindowExceeded { window: i64, context: String },

    /// Path-system enumeration exceeded the desk-scale guard.
    #[error("undecided at desk scale: more than {0} path systems enumerated")]
    Undecided(usize),

    /// The process is not stable (spectral radius of the companion matrix ≥ 1).
    #[error("process is unstable: spectral margin {0}")]
    Unstable(f64),

    /// A linear system is numerically singular.
    #[error("numerically singular — genericity or spec violated (condition number {0:e})")]
    Singular(f64),

    /// A covariance at the requested lag is not available from the provider.
    #[error("covariance lag {lag} outside provider range 0..={max}")]
    LagOutOfRange { lag: i64, max: usize },

    /// Not enough observations for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Malformed input file or serialization failure.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of numerical origin (instability, singularity, insufficient data).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Unstable(_) | Error::Singular(_) | Error::InsufficientData(_) | Error::Undecided(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
