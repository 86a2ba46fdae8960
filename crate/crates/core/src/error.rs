use thiserror::Error;

use crate::perm::Pattern;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be at least {min}, got {got}")]
    TooSmall { what: &'static str, min: u64, got: u64 },

    #[error("n = {n} exceeds the exhaustive enumeration bound {bound}")]
    AboveExhaustiveBound { n: usize, bound: usize },

    #[error("operation requires a non-empty permutation")]
    EmptyPermutation,

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("malformed block [{start}, {end}]: need end >= start - 1")]
    MalformedBlock { start: u64, end: u64 },

    #[error("coordinate {index} is outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pattern {pattern} is not supported here: {reason}")]
    UnsupportedPattern { pattern: Pattern, reason: &'static str },

    #[error("bucketings differ: {0}")]
    BucketMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}
