use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("SVD did not converge within {sweeps} Jacobi sweeps")]
    IterationFailure { sweeps: usize },

    #[error("rank deficient: numerical rank {rank} < required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gradient descent diverged at step {step}: loss {loss:e} exceeds 10x the minimum {min_loss:e}")]
    Divergence { step: usize, loss: f64, min_loss: f64 },

    #[error("declared regime {declared} contradicts N = {rows}, D = {cols}")]
    RegimeMismatch {
        declared: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("empty spectrum: matrix has numerical rank 0")]
    EmptySpectrum,

    #[error("x = {0} lies outside [-1, 1]")]
    Domain(f64),

    #[error("decomposition disagrees with the fitted estimator: |{predicted:e} - {direct:e}| > {tolerance:e}")]
    DecompositionMismatch {
        predicted: f64,
        direct: f64,
        tolerance: f64,
    },

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("target column `{0}` not found")]
    MissingTargetColumn(String),

    #[error("target column `{0}` is not numeric")]
    NonNumericTarget(String),

    #[error("no rows or feature columns left after cleaning")]
    EmptyAfterCleaning,

    #[error("n_train = {n_train} out of range for {total} rows")]
    SplitOutOfRange { n_train: usize, total: usize },

    #[error("plot has no usable series: {0}")]
    EmptySeries(String),

    #[error("cell (n_train = {n_train}, seed = {seed}): {source}")]
    Cell {
        n_train: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(op: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            op,
            expected,
            actual,
        }
    }
}
