use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph not connected after {attempts} Erdos-Renyi draws")]
    NotConnected { attempts: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("mixing matrix violates the weight conditions: {0}")]
    InvalidWeights(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("index {index} out of range for size {size}")]
    OutOfRange { index: usize, size: usize },

    #[error("ground set of size {size} exceeds the enumeration limit {limit}")]
    GroundSetTooLarge { size: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not feasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trajectory is strided (stride {0}); bound checks need every round")]
    StridedTrajectory(usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
