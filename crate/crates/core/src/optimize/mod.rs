//! Merit function, line search and the outer descent loop.
//!
//! Each iteration solves the direction QP with the current trial step
//! `t⁰ = t_{i-1}/β`, stops when `√|J'(V)| ≤ ε_tol`, raises the penalty `M`
//! until the merit slope is negative and backtracks until the Armijo
//! inequality, the mesh-quality bounds and (optionally) a feasibility bound
//! on the exact constraints hold.

mod line_search;
mod trace;

pub use line_search::{armijo_search, ensure_descent, merit_slope, merit_value, LineSearchResult};
pub use trace::{IterationRecord, OptTrace, Termination};

use crate::convexity::{constraint_values, constraints_on, convexify, is_convex, ConstraintSystem};
use crate::deform::{DirectionOperators, ElasticityParams, QpStrategy};
use crate::error::{Error, Result};
use crate::fem::{ProblemSpec, SolveOptions};
use crate::linalg::{dot, CsrMatrix};
use crate::mesh::{deformation_quality, SimplicialMesh};
use crate::qp::{QpSettings, QpStatus, WarmStart};
use crate::shapecalc::evaluate_shape;

#[derive(Debug, Clone)]
pub struct AlgorithmParams {
    pub t0: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Initial merit penalty.
    pub m: f64,
    pub beta_m: f64,
    pub eps_tol: f64,
    pub max_outer: usize,
    /// Backtracking cap; also caps the number of penalty increases.
    pub max_backtracks: usize,
    /// Impose the convexity constraints. Off gives the plain descent method.
    pub constrained: bool,
    /// Constrained runs also reject trial steps with `max Cᵢ(X + tV)` above
    /// this multiple of the squared bounding-box diagonal. `None` accepts any
    /// violation the merit function tolerates.
    pub feasibility_tol: Option<f64>,
    pub elasticity: ElasticityParams,
    pub qp: QpSettings,
    pub strategy: QpStrategy,
    pub solve: SolveOptions,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            t0: 1.0,
            beta: 0.5,
            sigma: 0.1,
            m: 1e-9,
            beta_m: 10.0,
            eps_tol: 1e-6,
            max_outer: 500,
            max_backtracks: 60,
            constrained: true,
            feasibility_tol: Some(1e-9),
            elasticity: ElasticityParams::default(),
            qp: QpSettings::default(),
            strategy: QpStrategy::default(),
            solve: SolveOptions {
                tol: 1e-12,
                ..SolveOptions::default()
            },
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0 must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma must lie in (0, 1)");
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return bad("M must be non-negative");
        }
        if !(self.beta_m > 1.0 && self.beta_m.is_finite()) {
            return bad("beta_M must exceed 1");
        }
        if !(self.eps_tol > 0.0) {
            return bad("eps_tol must be positive");
        }
        if let Some(tol) = self.feasibility_tol {
            if !(tol >= 0.0) {
                return bad("feasibility_tol must be non-negative");
            }
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        self.elasticity.validate()
    }
}

/// Final mesh of a run together with its trace. A run that stops on a
/// step failure still returns the last accepted mesh.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mesh: SimplicialMesh,
    pub trace: OptTrace,
    pub convexified: bool,
}

fn active_constraints(
    mesh: &SimplicialMesh,
    ops: &DirectionOperators,
    constrained: bool,
) -> Result<ConstraintSystem> {
    if constrained {
        constraints_on(mesh, &ops.boundary, true)
    } else {
        Ok(ConstraintSystem {
            values: Vec::new(),
            jacobian: Some(CsrMatrix::zeros(0, mesh.dim() * mesh.num_vertices())),
            index_map: Vec::new(),
        })
    }
}

pub fn run(initial: &SimplicialMesh, problem: &ProblemSpec, params: &AlgorithmParams) -> Result<RunOutcome> {
    params.validate()?;
    if problem.dim != initial.dim() {
        return Err(Error::DimensionMismatch {
            what: "problem dimension",
            expected: initial.dim(),
            found: problem.dim,
        });
    }
    let mut convexified = false;
    let mut mesh = if params.constrained && initial.dim() == 2 && !is_convex(initial, 0.0)? {
        convexified = true;
        convexify(initial)?
    } else {
        initial.clone()
    };

    let mut trace = OptTrace::default();
    let mut m = params.m;
    let mut prev_t = params.t0;
    let mut warm: Option<WarmStart> = None;
    for iter in 1..=params.max_outer {
        let t0 = prev_t / params.beta;
        let eval = evaluate_shape(&mesh, problem, params.solve)?;
        let ops = DirectionOperators::new(&mesh, &params.elasticity)?;
        let cs = active_constraints(&mesh, &ops, params.constrained)?;
        let max_c = cs.max_value();

        let mut dir = ops.solve(&mesh, &eval.gradient, &cs, t0, params.strategy, &params.qp, warm.as_ref())?;
        if dir.qp.status == QpStatus::MaxIter {
            let retry = QpSettings {
                scaling_iters: 4 * params.qp.scaling_iters.max(1),
                ..params.qp.clone()
            };
            dir = ops.solve(&mesh, &eval.gradient, &cs, t0, params.strategy, &retry, None)?;
        }
        let mut rec = IterationRecord {
            iter,
            objective: eval.objective,
            max_c,
            m,
            t0,
            qp_status: dir.qp.status,
            qp_iterations: dir.qp.iterations,
            max_multiplier: dir.ineq_multipliers.iter().copied().fold(0.0, f64::max),
            ..IterationRecord::default()
        };
        if dir.qp.status != QpStatus::Solved {
            trace.records.push(rec);
            trace.termination = Termination::StepFailure(format!(
                "direction QP {} after {} iterations",
                dir.qp.status.as_str(),
                dir.qp.iterations
            ));
            return Ok(RunOutcome { mesh, trace, convexified });
        }
        warm = Some(WarmStart::from(&dir.qp));

        let v = dir.v.values();
        let grad_pair = dot(eval.gradient.values(), v);
        rec.grad_norm = grad_pair.abs().sqrt();
        if rec.grad_norm <= params.eps_tol {
            rec.phi0 = eval.objective + m * cs.positive_part_sum();
            trace.records.push(rec);
            trace.termination = Termination::Stationary;
            return Ok(RunOutcome { mesh, trace, convexified });
        }

        match ensure_descent(grad_pair, &cs, v, m, params.beta_m, params.max_backtracks) {
            Ok(new_m) => m = new_m,
            Err(e) => {
                trace.records.push(rec);
                trace.termination = Termination::StepFailure(e.to_string());
                return Ok(RunOutcome { mesh, trace, convexified });
            }
        }
        let slope = merit_slope(grad_pair, &cs, v, m);
        let penalty = if params.constrained { m } else { 0.0 };
        let phi0 = eval.objective + penalty * cs.positive_part_sum();
        rec.m = m;
        rec.phi0 = phi0;
        rec.slope = slope;

        let limit = match params.feasibility_tol {
            Some(tol) if params.constrained => Some(tol * mesh.diameter().powi(2)),
            _ => None,
        };
        let feasible = |t: f64| match limit {
            Some(limit) => mesh
                .displaced(&dir.v, t)
                .and_then(|moved| constraint_values(&moved))
                .is_ok_and(|c| c.max_value() <= limit),
            None => true,
        };
        let search = armijo_search(
            phi0,
            slope,
            t0,
            params.beta,
            params.sigma,
            params.max_backtracks,
            |t| deformation_quality(&mesh, &dir.v, t).pass && feasible(t),
            |t| merit_value(&mesh, &dir.v, t, penalty, problem, params.solve),
        );
        let search = match search {
            Ok(s) => s,
            Err(e) => {
                trace.records.push(rec);
                trace.termination = Termination::StepFailure(e.to_string());
                return Ok(RunOutcome { mesh, trace, convexified });
            }
        };
        let q = deformation_quality(&mesh, &dir.v, search.t);
        rec.t = search.t;
        rec.k = search.k;
        rec.phi_t = search.phi;
        rec.min_det = q.min_det;
        rec.max_det = q.max_det;
        rec.max_norm = q.max_norm;
        rec.quality_rejections = search.quality_rejections;
        rec.accepted = true;
        trace.records.push(rec);
        mesh = mesh.displaced(&dir.v, search.t)?;
        prev_t = search.t;
    }
    trace.termination = Termination::MaxOuter;
    Ok(RunOutcome { mesh, trace, convexified })
}
