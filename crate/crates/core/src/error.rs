use thiserror::Error;

/// Errors raised by the cone primitives, samplers, special functions and bounds.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e} (tolerance {tolerance:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("matrix is not orthogonal: max |QtQ - I| = {deviation:e}")]
    NotOrthogonal { deviation: f64 },

    #[error("symmetric eigensolver failed to converge (dim {dim}, frobenius norm {norm:e}, max |entry| {max_abs:e})")]
    EigenFailure { dim: usize, norm: f64, max_abs: f64 },

    #[error("domain error in {function}: {reason}")]
    Domain { function: &'static str, reason: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
        intervals: usize,
    },

    #[error("walk step {step}: {source}")]
    WalkStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{bound}: {source}")]
    Bound {
        bound: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("optimizer produced a non-finite objective at interior probe (v = {v}, theta = {theta})")]
    NonFiniteObjective { v: f64, theta: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            function,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_bound(self, bound: &'static str) -> Self {
        Error::Bound {
            bound,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
