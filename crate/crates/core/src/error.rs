use alloc::string::String;
use alloc::vec::Vec;

use crate::pose::PoseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch, expected {expected:?}, found {found:?}")]
    Shape { op: &'static str, expected: (usize, usize), found: (usize, usize) },

    #[error("non-finite values in {what}")]
    NonFinite { what: &'static str },

    #[error(
        "matrix not positive definite at pivot {pivot} (pivot value {value:e}, largest diagonal {diag_max:e})"
    )]
    NotPositiveDefinite { pivot: usize, value: f64, diag_max: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{op} needs at least {needed} rows, found {found}")]
    TooFewRows { op: &'static str, needed: usize, found: usize },

    #[error("{what} is empty")]
    Empty { what: &'static str },

    #[error("train/test leakage: {} clip id(s) present in both splits (first: {})", ids.len(), ids.first().map(String::as_str).unwrap_or(""))]
    Leakage { ids: Vec<String> },

    #[error(transparent)]
    Pose(#[from] PoseError),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of the numerical kernels rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. } | Error::NoConvergence { .. })
    }
}
