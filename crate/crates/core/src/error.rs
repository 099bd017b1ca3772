use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("points and weights differ in length ({points} vs {weights})")]
    LengthMismatch { points: usize, weights: usize },

    #[error("non-finite coordinate or weight")]
    NonFinite,

    #[error("negative weight {0}")]
    NegativeWeight(f64),

    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("measure has no atoms")]
    Empty,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measures are not in convex order (no martingale coupling exists)")]
    NotInConvexOrder,

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("malformed input: {0}")]
    Format(String),
}
