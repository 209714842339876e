use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {0} is not a point of the dyadic grid")]
    NotOnGrid(f64),

    #[error("time zero has no dyadic level or ancestor")]
    ZeroTime,

    #[error("window [{0}, {1}] is not aligned to the samples of the path")]
    WindowNotAligned(f64, f64),

    #[error("empty window")]
    EmptyWindow,

    #[error("exponent condition violated: {0}")]
    ExponentCondition(String),

    #[error("paths do not share a grid or starting point")]
    GridMismatch,

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("value {norm} exceeds the declared bound {bound}")]
    BoundExceeded { norm: f64, bound: f64 },

    #[error("point is not in the set (distance {0})")]
    NotInSet(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}
