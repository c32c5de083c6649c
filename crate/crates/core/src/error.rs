use std::io;

use thiserror::Error;

use crate::harness::wire::{ErrorCode, WireError};
use crate::harness::TimingBreakdown;

pub type Result<T, E = GeloError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GeloError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("mixing matrix condition number {condition:.4e} is not below the limit {limit:.4e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("residual is empty: anchor span has rank {k_eff} out of {n} rows")]
    EmptyResidual { k_eff: usize, n: usize },

    #[error("not enough unknown rows: k={k} anchors for n={n} rows (need k < n-1)")]
    InsufficientUnknowns { k: usize, n: usize },

    #[error("dimension {dim} exceeds the {method} limit of {limit}")]
    DimensionTooLarge {
        method: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("wire format: {0}")]
    Wire(#[from] WireError),

    #[error("server replied with error {code:?}")]
    Remote { code: ErrorCode },

    #[error("transport failure talking to {endpoint}: {source}")]
    Transport {
        endpoint: String,
        #[source]
        source: io::Error,
        partial: Option<Box<TimingBreakdown>>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}
