use thiserror::Error;

pub type Result<T, E = UqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum UqError {
    #[error("invalid deformation spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter point: {0}")]
    InvalidPoint(String),

    #[error("deformation map is not invertible at ({x1}, {x2}): det = {det:e}")]
    NonInvertibleMap { x1: f64, x2: f64, det: f64 },

    #[error("tail index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("sparse grid has {knots} knots, above the cap of {cap}")]
    Capacity { knots: usize, cap: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl UqError {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            UqError::NonInvertibleMap { .. } | UqError::SolverDivergence { .. }
        )
    }
}
