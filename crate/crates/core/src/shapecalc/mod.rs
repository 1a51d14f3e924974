//! Discrete shape functional, adjoint state and the exact derivative of the
//! fully discrete objective with respect to vertex displacements.
//!
//! With state `A(X) u = b(X)` and objective `J(X, u)`, the adjoint is taken
//! with the sign `A p = -∂J/∂u`, so that
//!
//! ```text
//! J'(V) = ∫ j_x·V - j_v·DVᵀ∇u + ∇pᵀ[-DV - DVᵀ + div V I]∇u - div(fV) p + j div V
//! ```
//!
//! (plus `∫ p u div V` for the reaction term of the Neumann problem). All
//! integrals use the same quadrature as the objective and load, which makes
//! the formula the exact derivative of the discrete pipeline.

mod integrand;

pub use integrand::{partials_fd_defect, Integrand, StandardIntegrand};

use crate::error::{Error, Result};
use crate::fem::{
    functions_gradient_or_fd, BoundaryCondition, ProblemSpec, ScalarFieldP1, SolveOptions,
    StateOperator,
};
use crate::mesh::{geometry_quadrature, SimplicialMesh, VectorFieldP1};

/// Coefficients of the linear functional `V ↦ J_h'(Ω_h; V)`, `dim` per
/// vertex (vertex-major, matching [`VectorFieldP1`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeGradient {
    dim: usize,
    values: Vec<f64>,
}

impl ShapeGradient {
    pub fn from_values(dim: usize, values: Vec<f64>) -> Self {
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `J'(V)`: Euclidean pairing of gradient coefficients with nodal values.
pub fn pair(grad: &ShapeGradient, v: &VectorFieldP1) -> Result<f64> {
    if grad.dim != v.dim() || grad.values.len() != v.values().len() {
        return Err(Error::DimensionMismatch {
            what: "shape gradient pairing",
            expected: grad.values.len(),
            found: v.values().len(),
        });
    }
    Ok(crate::linalg::dot(&grad.values, v.values()))
}

/// `J_h = Σ_T Q_T(j(x, u_h, ∇u_h))`.
pub fn evaluate_objective(
    mesh: &SimplicialMesh,
    u: &ScalarFieldP1,
    integrand: &dyn Integrand,
) -> Result<f64> {
    u.check_mesh(mesh)?;
    let d = mesh.dim();
    let quad = geometry_quadrature(d);
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        let uv = u.cell_values(mesh, c);
        let gu = g.gradient(&uv);
        let mut s = 0.0;
        for (bary, w) in quad {
            let x = g.map(bary);
            let uq: f64 = (0..=d).map(|a| bary[a] * uv[a]).sum();
            s += w * integrand.value(&x[..d], uq, &gu[..d]);
        }
        if !s.is_finite() {
            return Err(Error::NonFinite {
                cell: c,
                what: "objective integrand",
            });
        }
        total += g.volume * s;
    }
    Ok(total)
}

/// Right-hand side `-(∫ j_u φ_i + j_v·∇φ_i)` of the adjoint equation over
/// all vertices.
pub fn adjoint_rhs(
    mesh: &SimplicialMesh,
    u: &ScalarFieldP1,
    integrand: &dyn Integrand,
) -> Result<Vec<f64>> {
    u.check_mesh(mesh)?;
    let d = mesh.dim();
    let quad = geometry_quadrature(d);
    let mut rhs = vec![0.0; mesh.num_vertices()];
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        let cell = mesh.cell(c);
        let uv = u.cell_values(mesh, c);
        let gu = g.gradient(&uv);
        for (bary, w) in quad {
            let x = g.map(bary);
            let uq: f64 = (0..=d).map(|a| bary[a] * uv[a]).sum();
            let ju = integrand.d_u(&x[..d], uq, &gu[..d]);
            let jv = integrand.d_g(&x[..d], uq, &gu[..d]);
            if !ju.is_finite() || jv.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    cell: c,
                    what: "integrand partials",
                });
            }
            for (a, &vtx) in cell.iter().enumerate() {
                let jv_grad: f64 = (0..d).map(|k| jv[k] * g.grads[a][k]).sum();
                rhs[vtx] -= g.volume * w * (ju * bary[a] + jv_grad);
            }
        }
    }
    Ok(rhs)
}

/// Discrete adjoint state for the state operator of `problem`.
pub fn solve_adjoint(
    mesh: &SimplicialMesh,
    u: &ScalarFieldP1,
    problem: &ProblemSpec,
    tol: f64,
) -> Result<ScalarFieldP1> {
    let op = StateOperator::new(mesh, problem.bc)?;
    solve_adjoint_with(
        &op,
        mesh,
        u,
        problem.integrand.as_ref(),
        SolveOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn solve_adjoint_with(
    op: &StateOperator,
    mesh: &SimplicialMesh,
    u: &ScalarFieldP1,
    integrand: &dyn Integrand,
    opts: SolveOptions,
) -> Result<ScalarFieldP1> {
    let rhs = adjoint_rhs(mesh, u, integrand)?;
    if rhs.iter().all(|&r| r == 0.0) {
        return Ok(ScalarFieldP1::zeros(mesh));
    }
    op.solve(&rhs, opts)
}

/// Assembles the discrete shape derivative from state `u` and adjoint `p`.
pub fn shape_derivative(
    mesh: &SimplicialMesh,
    u: &ScalarFieldP1,
    p: &ScalarFieldP1,
    problem: &ProblemSpec,
) -> Result<ShapeGradient> {
    u.check_mesh(mesh)?;
    p.check_mesh(mesh)?;
    let d = mesh.dim();
    let quad = geometry_quadrature(d);
    let j = problem.integrand.as_ref();
    let f = problem.rhs.as_ref();
    let fd_step = 1e-6 * mesh.diameter();
    let reaction = problem.bc == BoundaryCondition::NeumannReaction;
    let mass_denom = ((d + 1) * (d + 2)) as f64;
    let mut out = vec![0.0; d * mesh.num_vertices()];

    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        let cell = mesh.cell(c);
        let uv = u.cell_values(mesh, c);
        let pv = p.cell_values(mesh, c);
        let gu = g.gradient(&uv);
        let gp = g.gradient(&pv);
        let gp_gu: f64 = (0..d).map(|k| gp[k] * gu[k]).sum();
        // local contributions: loc[a][k]
        let mut loc = [[0.0; 3]; 4];

        for (bary, w) in quad {
            let x = g.map(bary);
            let xs = &x[..d];
            let uq: f64 = (0..=d).map(|a| bary[a] * uv[a]).sum();
            let pq: f64 = (0..=d).map(|a| bary[a] * pv[a]).sum();
            let jval = j.value(xs, uq, &gu[..d]);
            let jx = j.d_x(xs, uq, &gu[..d]);
            let jv = j.d_g(xs, uq, &gu[..d]);
            let fx = f.value(xs);
            let gf = functions_gradient_or_fd(f, xs, fd_step);
            if !jval.is_finite() || !fx.is_finite() {
                return Err(Error::NonFinite {
                    cell: c,
                    what: "derivative integrand",
                });
            }
            for a in 0..=d {
                let jv_dphi: f64 = (0..d).map(|m| jv[m] * g.grads[a][m]).sum();
                for k in 0..d {
                    let dphi = g.grads[a][k];
                    loc[a][k] += w
                        * (jx[k] * bary[a] - jv_dphi * gu[k]
                            - (gf[k] * bary[a] + fx * dphi) * pq
                            + jval * dphi);
                }
            }
        }

        let react = if reaction {
            // pᵀ M_T u with the exact P1 mass matrix
            let mut s = 0.0;
            for a in 0..=d {
                for b in 0..=d {
                    let m = if a == b { 2.0 } else { 1.0 } / mass_denom;
                    s += pv[a] * m * uv[b];
                }
            }
            s
        } else {
            0.0
        };

        for a in 0..=d {
            let dphi_gu: f64 = (0..d).map(|m| g.grads[a][m] * gu[m]).sum();
            let dphi_gp: f64 = (0..d).map(|m| g.grads[a][m] * gp[m]).sum();
            for k in 0..d {
                let dphi = g.grads[a][k];
                let stiff = -gp[k] * dphi_gu - gu[k] * dphi_gp + dphi * gp_gu;
                let v = g.volume * (loc[a][k] + stiff + react * dphi);
                out[cell[a] * d + k] += v;
            }
        }
    }
    Ok(ShapeGradient {
        dim: d,
        values: out,
    })
}

/// State, adjoint and shape gradient in one pass.
#[derive(Debug, Clone)]
pub struct ShapeEvaluation {
    pub state: ScalarFieldP1,
    pub adjoint: ScalarFieldP1,
    pub objective: f64,
    pub gradient: ShapeGradient,
}

pub fn evaluate_shape(
    mesh: &SimplicialMesh,
    problem: &ProblemSpec,
    opts: SolveOptions,
) -> Result<ShapeEvaluation> {
    let op = StateOperator::new(mesh, problem.bc)?;
    let load = crate::fem::assemble_load(mesh, problem.rhs.as_ref())?;
    let state = op.solve(&load, opts)?;
    let objective = evaluate_objective(mesh, &state, problem.integrand.as_ref())?;
    let adjoint = solve_adjoint_with(&op, mesh, &state, problem.integrand.as_ref(), opts)?;
    let gradient = shape_derivative(mesh, &state, &adjoint, problem)?;
    Ok(ShapeEvaluation {
        state,
        adjoint,
        objective,
        gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_stiffness, solve_state, Constant};
    use crate::mesh::{generate_primitive, Primitive};
    use std::f64::consts::PI;

    fn poisson(j: StandardIntegrand) -> ProblemSpec {
        ProblemSpec::new(Constant(1.0), j, BoundaryCondition::DirichletZero, 2)
    }

    #[test]
    fn volume_functional() {
        let m = generate_primitive(Primitive::UnitSquare, 2).unwrap();
        let u = ScalarFieldP1::zeros(&m);
        assert!((evaluate_objective(&m, &u, &StandardIntegrand::One).unwrap() - 1.0).abs() < 1e-14);
        let problem = poisson(StandardIntegrand::One);
        let p = solve_adjoint(&m, &u, &problem, 1e-12).unwrap();
        assert!(p.values().iter().all(|&x| x == 0.0));
        let grad = shape_derivative(&m, &u, &p, &problem).unwrap();
        let v = VectorFieldP1::from_fn(&m, |x| [x[0], x[1], 0.0]);
        assert!((pair(&grad, &v).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_energy_matches_stiffness_form() {
        let m = generate_primitive(Primitive::UnitDisk, 1).unwrap();
        let u = ScalarFieldP1::from_fn(&m, |x| x[0] * x[0] - 0.3 * x[1]);
        let a = assemble_stiffness(&m).unwrap();
        let j = evaluate_objective(&m, &u, &StandardIntegrand::GradSquared).unwrap();
        assert!((j - a.bilinear(u.values(), u.values())).abs() < 1e-12);
    }

    #[test]
    fn adjoint_of_u_is_minus_state() {
        let m = generate_primitive(Primitive::UnitDisk, 2).unwrap();
        let problem = poisson(StandardIntegrand::U);
        let u = solve_state(&m, &problem, 1e-12).unwrap();
        let p = solve_adjoint(&m, &u, &problem, 1e-12).unwrap();
        for (a, b) in u.values().iter().zip(p.values()) {
            assert!((a + b).abs() < 1e-12);
        }
        let j = evaluate_objective(&m, &u, &StandardIntegrand::U).unwrap();
        assert!((j - PI / 8.0).abs() < 0.02);
    }

    #[test]
    fn adjoint_vanishes_for_zero_state_u_squared() {
        let m = generate_primitive(Primitive::UnitSquare, 2).unwrap();
        let u = ScalarFieldP1::zeros(&m);
        let p = solve_adjoint(&m, &u, &poisson(StandardIntegrand::USquared), 1e-12).unwrap();
        assert!(p.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pairing_is_linear_and_checks_size() {
        let m = generate_primitive(Primitive::UnitSquare, 1).unwrap();
        let g = ShapeGradient::from_values(2, (0..18).map(|i| i as f64 * 0.1 - 0.7).collect());
        let v = VectorFieldP1::from_fn(&m, |x| [x[0] * x[1], 1.0 - x[0], 0.0]);
        let w = VectorFieldP1::from_fn(&m, |x| [x[1].sin(), x[0], 0.0]);
        let comb: Vec<f64> = v
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| 2.0 * a - 3.0 * b)
            .collect();
        let comb = VectorFieldP1::from_values(&m, comb).unwrap();
        let lhs = pair(&g, &comb).unwrap();
        let rhs = 2.0 * pair(&g, &v).unwrap() - 3.0 * pair(&g, &w).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert_eq!(pair(&g, &VectorFieldP1::zeros(&m)).unwrap(), 0.0);
        let naive: f64 = (0..m.num_vertices())
            .map(|i| (0..2).map(|k| g.values()[2 * i + k] * v.at(i)[k]).sum::<f64>())
            .sum();
        assert!((pair(&g, &v).unwrap() - naive).abs() < 1e-14);
        let small = generate_primitive(Primitive::UnitSquare, 0).unwrap();
        assert!(pair(&g, &VectorFieldP1::zeros(&small)).is_err());
    }
}
