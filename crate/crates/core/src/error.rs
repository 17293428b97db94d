use thiserror::Error;

use crate::mesh::MeshViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(#[from] MeshViolation),

    #[error("kernel family violates the zero-tail rule at row {n}, index {j}: nonzero after zero")]
    ZeroTail { n: usize, j: usize },

    #[error("zero leading coefficient a[{level}][0]")]
    ZeroLeading { level: usize },

    #[error("size mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("kernel is not positive at elapsed time {at}")]
    NonPositiveKernel { at: f64 },

    #[error("quadrature did not reach tolerance on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("jacobi eigenvalue iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("singular linear system")]
    Singular,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
