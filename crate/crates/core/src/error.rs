use thiserror::Error;

use crate::model::Kind;

/// Errors raised by structure encodings, oracles, solvers and losses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions for {kind}: {reason}")]
    InvalidDims { kind: Kind, reason: String },

    #[error("dimension mismatch for {what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("malformed structure id at index {index}: {reason}")]
    Encoding { index: usize, reason: String },

    #[error("structure id of kind {found} does not match spec of kind {expected}")]
    KindMismatch { expected: Kind, found: Kind },

    #[error("refusing to enumerate {count} structures (cap is {cap})")]
    TooManyStructures { count: u128, cap: u128 },

    #[error("degenerate support: candidate column {index} is linearly dependent on the support")]
    DegenerateSupport { index: usize },

    #[error("marginal inference is unsupported for {kind} structures: {reason}")]
    UnsupportedMarginal { kind: Kind, reason: &'static str },

    #[error("ill-conditioned matrix-tree Laplacian ({reason}); try rescaling the potentials")]
    IllConditioned { reason: String },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

pub type Result<T> = std::result::Result<T, Error>;
