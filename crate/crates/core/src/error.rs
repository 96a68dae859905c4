use thiserror::Error;

/// Errors produced by the geometric and functional routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate body: affine rank {rank} in dimension {dim}")]
    Degenerate { rank: usize, dim: usize },
    #[error("unbounded body")]
    Unbounded,
    #[error("body is not origin-symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },
    #[error("non-convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("integral diverges or failed to converge: {0}")]
    Divergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl From<std::io::Error> for GeomError {
    fn from(e: std::io::Error) -> Self {
        GeomError::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GeomError::Domain(msg.into()))
}
