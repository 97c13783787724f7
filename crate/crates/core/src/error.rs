use std::fmt;

use thiserror::Error;

use crate::coefficients::SignClass;

/// A single violated constraint, named by the configuration key it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join(.0))]
    InvalidConfig(Vec<Violation>),
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("point lies outside the region of absolute convergence: {0}")]
    OutsideRegion(String),
    #[error("no certified bound available: {0}")]
    NoCertifiedBound(String),
    #[error("tolerance {tol:e} unreachable within a cap of {cap} lattice points")]
    ToleranceUnreachable { tol: f64, cap: u64 },
    #[error("coefficient sign class `{0}` does not define a probability distribution")]
    IndefiniteSign(SignClass),
    #[error("normalizer is indistinguishable from zero at working precision")]
    DegenerateNormalizer,
    #[error("moment order {order} exceeds the cap {cap}")]
    MomentOrderCap { order: u32, cap: u32 },
    #[error("report contains no confirmed zero")]
    NoConfirmedZero,
    #[error("function vanishes on the rectangle boundary after {attempts} perturbations")]
    BoundaryZero { attempts: usize },
    #[error("argument tracking failed: {0}")]
    ArgumentTracking(String),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn param(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's configuration rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidParameter { .. }
                | Error::DimensionMismatch { .. }
                | Error::IndefiniteSign(_)
                | Error::MomentOrderCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
