//! Piecewise-linear finite elements: assembly of stiffness, mass and load,
//! and solution of the state equations (homogeneous Dirichlet Poisson, or
//! Neumann reaction-diffusion `-Δu + u = f`).

mod assembly;
mod functions;

use std::sync::Arc;

pub use assembly::{assemble_load, assemble_mass, assemble_stiffness};
pub use functions::{Constant, Func, FuncWithGradient, SpatialFunction};
pub(crate) use functions::gradient_or_fd as functions_gradient_or_fd;

use crate::error::{Error, Result};
use crate::linalg::{cg_solve_with, norm2, CgOptions, CsrMatrix, EnvelopeCholesky};
use crate::mesh::{extract_boundary, SimplicialMesh};
use crate::shapecalc::Integrand;

/// Nodal coefficients of a continuous piecewise-linear scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldP1(pub Vec<f64>);

impl ScalarFieldP1 {
    pub fn zeros(mesh: &SimplicialMesh) -> Self {
        Self(vec![0.0; mesh.num_vertices()])
    }

    pub fn from_fn(mesh: &SimplicialMesh, f: impl Fn(&[f64]) -> f64) -> Self {
        Self((0..mesh.num_vertices()).map(|v| f(mesh.point(v))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn check_mesh(&self, mesh: &SimplicialMesh) -> Result<()> {
        if self.0.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                what: "scalar field coefficients",
                expected: mesh.num_vertices(),
                found: self.0.len(),
            });
        }
        Ok(())
    }

    /// Nodal values of cell `c` in local order.
    pub(crate) fn cell_values(&self, mesh: &SimplicialMesh, c: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (a, &v) in mesh.cell(c).iter().enumerate() {
            out[a] = self.0[v];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// `-Δu = f`, `u = 0` on the boundary.
    DirichletZero,
    /// `-Δu + u = f`, `∂u/∂n = 0` on the boundary.
    NeumannReaction,
}

/// State equation data together with the objective integrand.
#[derive(Clone)]
pub struct ProblemSpec {
    pub rhs: Arc<dyn SpatialFunction>,
    pub integrand: Arc<dyn Integrand>,
    pub bc: BoundaryCondition,
    pub dim: usize,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("bc", &self.bc)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        rhs: impl SpatialFunction + 'static,
        integrand: impl Integrand + 'static,
        bc: BoundaryCondition,
        dim: usize,
    ) -> Self {
        Self {
            rhs: Arc::new(rhs),
            integrand: Arc::new(integrand),
            bc,
            dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    /// Envelope Cholesky with reverse Cuthill-McKee ordering.
    Direct,
    Cg { jacobi: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Required relative residual `‖b - Au‖ ≤ tol ‖b‖`.
    pub tol: f64,
    pub solver: LinearSolver,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            solver: LinearSolver::Direct,
        }
    }
}

/// Discrete state operator on the unknowns of `bc`: the stiffness matrix
/// restricted to interior vertices (Dirichlet) or stiffness plus mass
/// (Neumann reaction).
#[derive(Debug, Clone)]
pub struct StateOperator {
    pub matrix: CsrMatrix,
    /// Per vertex: whether it is an unknown.
    pub free: Vec<bool>,
}

impl StateOperator {
    pub fn new(mesh: &SimplicialMesh, bc: BoundaryCondition) -> Result<Self> {
        let a = assemble_stiffness(mesh)?;
        match bc {
            BoundaryCondition::DirichletZero => {
                let b = extract_boundary(mesh)?;
                let free: Vec<bool> = b.boundary_index.iter().map(|i| i.is_none()).collect();
                Ok(Self {
                    matrix: a.principal_submatrix(&free),
                    free,
                })
            }
            BoundaryCondition::NeumannReaction => {
                let m = assemble_mass(mesh)?;
                Ok(Self {
                    matrix: a.add_scaled(&m, 1.0)?,
                    free: vec![true; mesh.num_vertices()],
                })
            }
        }
    }

    /// Solves with a right-hand side given over all vertices; entries at
    /// constrained vertices are ignored and the result is zero there.
    pub fn solve(&self, rhs: &[f64], opts: SolveOptions) -> Result<ScalarFieldP1> {
        let b: Vec<f64> = rhs
            .iter()
            .zip(&self.free)
            .filter(|(_, &f)| f)
            .map(|(r, _)| *r)
            .collect();
        let x = solve_spd(&self.matrix, &b, opts)?;
        let mut out = vec![0.0; rhs.len()];
        let mut k = 0;
        for (o, &f) in out.iter_mut().zip(&self.free) {
            if f {
                *o = x[k];
                k += 1;
            }
        }
        Ok(ScalarFieldP1(out))
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: SolveOptions) -> Result<Vec<f64>> {
    if b.is_empty() {
        return Ok(Vec::new());
    }
    match opts.solver {
        LinearSolver::Direct => {
            let chol = EnvelopeCholesky::factor(a)?;
            let mut x = chol.solve(b);
            // one step of iterative refinement
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            let dx = chol.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            let ax = a.mul_vec(&x);
            let res = norm2(&b.iter().zip(&ax).map(|(b, ax)| b - ax).collect::<Vec<_>>());
            let bn = norm2(b);
            if bn > 0.0 && res > opts.tol.max(1e-13) * bn {
                return Err(Error::CgNotConverged {
                    iterations: 0,
                    residual: res / bn,
                });
            }
            Ok(x)
        }
        LinearSolver::Cg { jacobi } => Ok(cg_solve_with(
            a,
            b,
            None,
            CgOptions {
                tol: opts.tol,
                jacobi,
                max_iter: None,
            },
        )?
        .x),
    }
}

/// Discrete state `u_h` for the given problem.
pub fn solve_state(mesh: &SimplicialMesh, problem: &ProblemSpec, tol: f64) -> Result<ScalarFieldP1> {
    solve_state_with(
        mesh,
        problem,
        SolveOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn solve_state_with(
    mesh: &SimplicialMesh,
    problem: &ProblemSpec,
    opts: SolveOptions,
) -> Result<ScalarFieldP1> {
    if problem.dim != mesh.dim() {
        return Err(Error::DimensionMismatch {
            what: "problem dimension",
            expected: mesh.dim(),
            found: problem.dim,
        });
    }
    let op = StateOperator::new(mesh, problem.bc)?;
    let b = assemble_load(mesh, problem.rhs.as_ref())?;
    op.solve(&b, opts)
}
