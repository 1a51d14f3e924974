use thiserror::Error;

/// Errors raised by the shape optimization library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("non-conforming mesh: facet {facet:?} is shared by {count} cells")]
    NonConforming { facet: Vec<usize>, count: usize },

    #[error("cell {cell} is degenerate (zero volume)")]
    DegenerateCell { cell: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unknown mesh primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("refinement level {0} exceeds the maximum of 8")]
    RefinementTooDeep(usize),

    #[error("boundary is not a single closed loop: {0}")]
    BoundaryNotSimpleLoop(String),

    #[error("boundary polygon is self-intersecting")]
    SelfIntersecting,

    #[error(
        "deformation rejected by quality check (min det {min_det:.4}, max det {max_det:.4}, max norm {max_norm:.4})"
    )]
    QualityCheckFailed {
        min_det: f64,
        max_det: f64,
        max_norm: f64,
    },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("non-finite {what} in cell {cell}")]
    NonFinite { cell: usize, what: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("merit parameter did not produce a descent direction after {0} increases")]
    NoDescent(usize),

    #[error("line search failed: no acceptable step after {0} reductions")]
    StepFailure(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
