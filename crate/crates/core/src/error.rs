use thiserror::Error;

use crate::geometry::MetricViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point has zero dimensions")]
    ZeroDimension,

    #[error("non-finite coordinate {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty center set")]
    EmptyCenterSet,

    #[error("weighted set has {points} points but {weights} weights")]
    LengthMismatch { points: usize, weights: usize },

    #[error("invalid weight {value} at position {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("k = {k} must satisfy 1 <= k <= n = {n}")]
    InvalidK { k: usize, n: usize },

    #[error("{what} requires at most {cap} points, got {n}")]
    TooLarge {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("index {index} out of bounds for metric of size {size}")]
    IndexOutOfBounds { index: usize, size: usize },

    #[error("invalid metric: {0}")]
    Metric(#[from] MetricViolation),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    range: &'static str,
    ok: bool,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
