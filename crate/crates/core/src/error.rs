use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("growth rate decreases at index {index}")]
    NonMonotone { index: usize },
    #[error("growth rate is below 1 at index {index}")]
    BelowOne { index: usize },
    #[error("growth rate is constant on the window and cannot tend to infinity")]
    Stationary,
    #[error("rate table has {found} entries, window needs {needed}")]
    TableTooShort { needed: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("system has no matrices")]
    EmptySystem,
    #[error("dimension mismatch at index {index}: expected {expected}x{expected}, found {rows}x{cols}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("non-finite entry in matrix {index}")]
    NonFinite { index: usize },
    #[error("evolution operator overflowed at (m, n) = ({m}, {n})")]
    Overflow { m: usize, n: usize },
    #[error("window mismatch: expected {expected}, found {found}")]
    WindowMismatch { expected: usize, found: usize },
    #[error("kernel rank varies: index {index} has rank {found}, expected {expected}")]
    RankMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("restricted one-step map at index {index} is singular (condition {condition:e})")]
    SingularRestriction { index: usize, condition: f64 },
    #[error("subspace basis is zero")]
    DegenerateSubspace,
    #[error("malformed candidate sequence at index {index}: {reason}")]
    MalformedCandidate { index: usize, reason: &'static str },
    #[error("window {window} too small for divergence diagnostics (need at least 8)")]
    WindowTooSmall { window: usize },
    #[error("partial sum {partial_sum} exceeds bound {bound} at index {index}")]
    BoundViolated {
        index: usize,
        partial_sum: f64,
        bound: f64,
    },
    #[error("norm at index {index} falls below the base norm (ratio {ratio})")]
    LowerBoundViolation { index: usize, ratio: f64 },
    #[error("h^2 / (1 + ln a) is not increasing at index {index}")]
    HFamilyViolation { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
