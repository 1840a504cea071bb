use thiserror::Error;

/// Errors produced by model construction, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(
        "interpolant infeasible: constraint z[{i}] - z[{j}] >= a[{j}]^T (x[{i}] - x[{j}]) \
         violated by {violation:.6e}"
    )]
    InfeasibleInterpolant { i: usize, j: usize, violation: f64 },

    #[error("non-finite value of the generator or its gradient at grid point {point:?}")]
    NonFiniteGenerator { point: Vec<f64> },

    #[error("index {index} out of range for {len} data points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("csv parse error at row {row}, column {col}: {message}")]
    CsvCell { row: usize, col: String, message: String },

    #[error("missing column {0:?} in csv header")]
    MissingColumn(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
