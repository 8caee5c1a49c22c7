use thiserror::Error;

use crate::coeffs::{EvalError, ParseError};

/// Errors surfaced by the simulation and analysis kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{0}")]
    Eval(#[from] EvalError),

    #[error("unknown system `{name}` (available: {available})")]
    UnknownSystem { name: String, available: String },

    #[error("damping floor violated: lambda = {lambda} < kappa0 = {kappa0} at (t={t}, x={x}, y={y})")]
    DampingFloor { lambda: f64, kappa0: f64, t: f64, x: f64, y: f64 },

    #[error("non-finite state in {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },

    #[error("stationary density is not integrable: {0}")]
    NonIntegrable(String),

    #[error("diffusion coefficient {value} is not positive at y = {y}")]
    DegenerateDiffusion { y: f64, value: f64 },

    #[error("density vanishes at interior grid point y = {y}")]
    DensityNotPositive { y: f64 },

    #[error("requested time {requested} lies beyond path end {end}")]
    BeyondPath { requested: f64, end: f64 },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("weight function w = {value} is not positive at s = {s}")]
    NonPositiveWeight { s: f64, value: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Strips any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
