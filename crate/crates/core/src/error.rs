//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by the geometry, quadrature, fitting and flow routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is not in the open upper half-space (y = {0})")]
    NotInHalfSpace(f64),

    #[error("Möbius map sends {0} to infinity")]
    MappedToInfinity(f64),

    #[error("radial projection undefined at the center of the background circle")]
    UndefinedProjection,

    #[error("truncation {eps} is at or above the apex height {apex}; the truncated set is empty")]
    EmptyTruncation { eps: f64, apex: f64 },

    #[error("configurations are not comparable: {0}")]
    IncomparableConfigs(String),

    #[error("quadrature did not reach tolerance {tol:e} within {nodes} nodes (best {value}, error {error:e})")]
    BudgetExceeded {
        value: f64,
        error: f64,
        tol: f64,
        nodes: usize,
    },

    #[error("ill-conditioned fit (condition estimate {condition:e}, rank {rank} of {columns})")]
    IllConditionedFit {
        condition: f64,
        rank: usize,
        columns: usize,
    },

    #[error("divergent parts do not cancel (singular part {singular:e} at eps = {eps:e})")]
    NonCancellingDivergence { singular: f64, eps: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("invalid flow state: {0}")]
    InvalidState(String),

    #[error("time step rejected (max update {max_update:e}); retry with dt <= {suggested_dt:e}")]
    StepRejected { max_update: f64, suggested_dt: f64 },

    #[error("evaluation outside the band of the background field: {0}")]
    Domain(String),

    #[error("curvature integral does not converge: {0}")]
    Diagnostics(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
