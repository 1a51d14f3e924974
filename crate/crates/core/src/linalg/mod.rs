//! Sparse matrices and the linear solvers used by assembly, the state
//! equations and the direction-finding problem.

mod cg;
mod cholesky;
mod sparse;

pub use cg::{cg_solve, cg_solve_with, CgOptions, CgOutcome};
pub use cholesky::EnvelopeCholesky;
pub use sparse::{CsrMatrix, TripletBuilder};

/// Symmetric sparse operator; stored as a full (both triangles) CSR matrix.
pub type SparseSymmetricOperator = CsrMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
