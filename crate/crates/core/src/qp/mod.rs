//! Convex quadratic programs
//!
//! ```text
//! minimize    ½ zᵀ H z + gᵀ z
//! subject to  A z ≤ b,   C z = d
//! ```
//!
//! solved by an operator-splitting (ADMM) iteration in the form popularized
//! by OSQP: Ruiz equilibration, over-relaxation, adaptive step parameter,
//! infeasibility certificates, and a polishing step that solves the KKT
//! system on the detected active set so that multipliers are accurate to
//! round-off.

mod admm;
mod kkt;

pub use admm::{solve_qp, solve_qp_warm, QpSettings, WarmStart};
pub use kkt::{kkt_residuals, KktResiduals};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub hessian: CsrMatrix,
    pub linear: Vec<f64>,
    /// Rows `aᵢ` of `A z ≤ b`.
    pub ineq: CsrMatrix,
    pub ineq_rhs: Vec<f64>,
    /// Rows `cⱼ` of `C z = d`.
    pub eq: CsrMatrix,
    pub eq_rhs: Vec<f64>,
}

impl QuadraticProgram {
    pub fn new(
        hessian: CsrMatrix,
        linear: Vec<f64>,
        ineq: CsrMatrix,
        ineq_rhs: Vec<f64>,
        eq: CsrMatrix,
        eq_rhs: Vec<f64>,
    ) -> Result<Self> {
        let n = linear.len();
        let check = |what: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("hessian rows", n, hessian.nrows())?;
        check("hessian columns", n, hessian.ncols())?;
        check("inequality columns", n, ineq.ncols())?;
        check("inequality right-hand side", ineq.nrows(), ineq_rhs.len())?;
        check("equality columns", n, eq.ncols())?;
        check("equality right-hand side", eq.nrows(), eq_rhs.len())?;
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&linear) || !finite(&ineq_rhs) || !finite(&eq_rhs) {
            return Err(Error::InvalidParameter("non-finite QP data".into()));
        }
        Ok(Self {
            hessian,
            linear,
            ineq,
            ineq_rhs,
            eq,
            eq_rhs,
        })
    }

    /// Problem without equality constraints.
    pub fn inequality_only(
        hessian: CsrMatrix,
        linear: Vec<f64>,
        ineq: CsrMatrix,
        ineq_rhs: Vec<f64>,
    ) -> Result<Self> {
        let n = linear.len();
        Self::new(hessian, linear, ineq, ineq_rhs, CsrMatrix::zeros(0, n), Vec::new())
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        0.5 * self.hessian.bilinear(z, z) + crate::linalg::dot(&self.linear, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    MaxIter,
    Infeasible,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solved => "solved",
            Self::MaxIter => "max_iter",
            Self::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub primal: Vec<f64>,
    /// `λ ≥ 0` for `A z ≤ b`.
    pub ineq_multipliers: Vec<f64>,
    /// `ν` for `C z = d`, with stationarity `Hz + g + Aᵀλ + Cᵀν = 0`.
    pub eq_multipliers: Vec<f64>,
    pub status: QpStatus,
    pub kkt: KktResiduals,
    pub iterations: usize,
    pub polished: bool,
}
