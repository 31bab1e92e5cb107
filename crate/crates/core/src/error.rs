use thiserror::Error;

/// Errors produced by the polytope, solver and synthesis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error("polytope is unbounded along direction {direction:?}")]
    Unbounded { direction: Vec<f64> },

    #[error("vertex set is not full-dimensional (affine rank {rank} < {dim})")]
    Degenerate { rank: usize, dim: usize },

    #[error("origin is not an interior point of the polytope")]
    OriginNotInterior,

    #[error("point lies outside the convex hull (distance residual {residual:.3e})")]
    OutsideHull { residual: f64 },

    #[error("linear program failed: {0}")]
    LpBreakdown(String),

    #[error("convex program is infeasible over the whole gamma range")]
    Infeasible,

    #[error("coefficient {coefficient} of atom {atom} exceeds its shift bound {bound}; enlarge the bound")]
    ShiftBoundExceeded { atom: usize, coefficient: f64, bound: f64 },

    #[error("decomposition sign pattern violated: {0}")]
    SignPattern(String),

    #[error("data matrix has rank {rank} < {required}: consistency set is not compact, collect more informative data")]
    NotIdentifiable { rank: usize, required: usize },

    #[error("no certificate: {0}")]
    NoCertificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
