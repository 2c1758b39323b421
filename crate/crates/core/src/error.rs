//! Error type shared by every module.
//!
//! Variants are grouped by what the caller did wrong rather than by module:
//! structural errors (shape/space mismatches), domain errors (invalid
//! exponent, trivial input), size guards, and geometry preconditions.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Every value vector of the field is zero; the property is undefined.
    #[error("trivial field: every value is zero")]
    TrivialField,

    /// Every coefficient vector of the sum is zero (or the list is empty).
    #[error("trivial sum: every coefficient vector is zero")]
    TrivialSum,

    #[error("operands live on different probability spaces ({left} vs {right} atoms, or unequal weights)")]
    SpaceMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("invalid exponent: p = {p} (need p >= 1)")]
    InvalidExponent { p: f64 },

    #[error("operation does not support this exponent: {0}")]
    UnsupportedExponent(&'static str),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid values: {0}")]
    InvalidValues(String),

    #[error("{what} of {got} exceeds the supported limit {limit}")]
    SizeGuard {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    /// A lemma or constructor hypothesis failed; the message names the
    /// violated equality with both sides.
    #[error("geometry precondition violated: {0}")]
    Geometry(String),

    #[error("index {index} out of range for {len} vectors")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
