use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid protograph: {0}")]
    InvalidProtograph(String),

    #[error("trivial cut: gcd({n_c}, {n_v}) = 1, expand the protograph with M >= 2 first")]
    TrivialCut { n_c: usize, n_v: usize },

    #[error("base entry {entry} at ({row}, {col}) exceeds lift size {lift}")]
    EntryExceedsLift {
        row: usize,
        col: usize,
        entry: u32,
        lift: usize,
    },

    #[error("malformed alist document: {0}")]
    MalformedAlist(String),

    #[error("code dimension {k} exceeds enumeration limit {limit}")]
    DimensionTooLarge { k: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("optimizer unreliable at delta = {delta}: multistart spread {spread:e}")]
    OptimizerUnreliable { delta: f64, spread: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
