use thiserror::Error;

/// Errors raised by the czkit library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("distance matrix has {rows} rows but {expected} points were declared")]
    Shape { rows: usize, expected: usize },

    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    Ragged { row: usize, len: usize, n: usize },

    #[error("weight vector has length {len}, expected {n}")]
    WeightLength { len: usize, n: usize },

    #[error("empty space: at least one point is required")]
    Empty,

    #[error("distance matrix is asymmetric at ({i}, {j}): {dij} != {dji}")]
    Asymmetric { i: usize, j: usize, dij: f64, dji: f64 },

    #[error("nonzero diagonal entry at {i}: {value}")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("distance between distinct points {i} and {j} is {value}; must be finite and positive")]
    NonPositiveDistance { i: usize, j: usize, value: f64 },

    #[error("triangle inequality violated at ({i}, {k}) via {j}: {dik} > {dij} + {djk}")]
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        dij: f64,
        djk: f64,
    },

    #[error("weight of point {i} is {value}; weights must be finite and strictly positive")]
    NonPositiveWeight { i: usize, value: f64 },

    #[error("point index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("graph is disconnected: no path between {i} and {j}")]
    Disconnected { i: usize, j: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
