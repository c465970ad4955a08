use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("Hilbert space dimension {0} is below the minimum of 2")]
    DimensionTooSmall(usize),

    #[error("vector norm {0:e} is too small to normalize")]
    ZeroVector(f64),

    #[error("state is not normalized: |norm^2 - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("states {i} and {j} are (nearly) orthogonal: |overlap| = {modulus:e}")]
    Orthogonality { i: usize, j: usize, modulus: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("curves do not join: junction fidelity {fidelity}")]
    Junction { fidelity: f64 },

    #[error("boundary error: {0}")]
    Boundary(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("positivity violated between samples {i} and {j}: value {value:e}")]
    Positivity { i: usize, j: usize, value: f64 },

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("tangent vectors are not based at the given state")]
    Base,

    #[error("states {i} and {j} are not in phase: overlap {re:e} + {im:e}i")]
    Phase { i: usize, j: usize, re: f64, im: f64 },

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
