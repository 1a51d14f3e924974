use crate::convexity::{constraint_values, ConstraintSystem};
use crate::error::{Error, Result};
use crate::fem::{solve_state_with, ProblemSpec, SolveOptions};
use crate::mesh::{SimplicialMesh, VectorFieldP1};
use crate::shapecalc::evaluate_objective;

/// `φ(t) = J(Ω_t) + M Σ [Cᵢ(X + tV)]⁺`. The quality check is the caller's job.
pub fn merit_value(
    mesh: &SimplicialMesh,
    v: &VectorFieldP1,
    t: f64,
    m: f64,
    problem: &ProblemSpec,
    opts: SolveOptions,
) -> Result<f64> {
    let moved = mesh.displaced(v, t)?;
    let u = solve_state_with(&moved, problem, opts)?;
    let j = evaluate_objective(&moved, &u, problem.integrand.as_ref())?;
    if m == 0.0 {
        return Ok(j);
    }
    Ok(j + m * constraint_values(&moved)?.positive_part_sum())
}

/// `φ'(0) = J'(V) + M Σ_{Cᵢ > 0} DCᵢ V`
pub fn merit_slope(grad_pair: f64, cs: &ConstraintSystem, v: &[f64], m: f64) -> f64 {
    let Some(dc) = &cs.jacobian else {
        return grad_pair;
    };
    let mut s = 0.0;
    for (r, &c) in cs.values.iter().enumerate() {
        if c > 0.0 {
            let (idx, vals) = dc.row(r);
            s += idx.iter().zip(vals).map(|(&j, a)| a * v[j]).sum::<f64>();
        }
    }
    grad_pair + m * s
}

/// Smallest `M β_Mʲ` with negative merit slope, `j ≤ max_increases`.
pub fn ensure_descent(
    grad_pair: f64,
    cs: &ConstraintSystem,
    v: &[f64],
    m: f64,
    beta_m: f64,
    max_increases: usize,
) -> Result<f64> {
    let mut m = m;
    for _ in 0..=max_increases {
        if merit_slope(grad_pair, cs, v, m) < 0.0 {
            return Ok(m);
        }
        m *= beta_m;
    }
    Err(Error::NoDescent(max_increases))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub k: usize,
    pub t: f64,
    /// `φ(t)` at the accepted step.
    pub phi: f64,
    /// Trial steps rejected by the quality check.
    pub quality_rejections: usize,
}

/// Smallest `k` for which `t = t0 βᵏ` passes `quality(t)` and
/// `φ(t) ≤ φ(0) + σ t φ'(0)`. The merit is only evaluated on steps that
/// pass the quality check.
#[allow(clippy::too_many_arguments)]
pub fn armijo_search(
    phi0: f64,
    slope: f64,
    t0: f64,
    beta: f64,
    sigma: f64,
    max_k: usize,
    mut quality: impl FnMut(f64) -> bool,
    mut merit: impl FnMut(f64) -> Result<f64>,
) -> Result<LineSearchResult> {
    if !(slope < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "line search needs a negative slope, got {slope}"
        )));
    }
    let mut t = t0;
    let mut quality_rejections = 0;
    for k in 0..=max_k {
        if quality(t) {
            let phi = merit(t)?;
            if phi <= phi0 + sigma * t * slope {
                return Ok(LineSearchResult {
                    k,
                    t,
                    phi,
                    quality_rejections,
                });
            }
        } else {
            quality_rejections += 1;
        }
        t *= beta;
    }
    Err(Error::StepFailure(max_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::mesh::{deformation_quality, generate_primitive, Primitive};

    fn one_row(c: f64, row: &[f64]) -> ConstraintSystem {
        let dense = nalgebra::DMatrix::from_row_slice(1, row.len(), row);
        ConstraintSystem {
            values: vec![c],
            jacobian: Some(CsrMatrix::from_dense(&dense)),
            index_map: vec![vec![0]],
        }
    }

    #[test]
    fn slope_formula() {
        let cs = one_row(0.5, &[-3.0]);
        assert_eq!(merit_slope(1.0, &cs, &[1.0], 2.0), -5.0);
        assert_eq!(merit_slope(0.0, &cs, &[0.0], 2.0), 0.0);
        let feasible = one_row(-0.5, &[-3.0]);
        assert_eq!(merit_slope(-0.7, &feasible, &[1.0], 2.0), -0.7);
    }

    #[test]
    fn penalty_growth() {
        let feasible = one_row(-1.0, &[1.0]);
        assert_eq!(ensure_descent(-1.0, &feasible, &[1.0], 1e-9, 10.0, 60).unwrap(), 1e-9);
        let cs = one_row(1.0, &[-1.0]);
        let m = ensure_descent(1.0, &cs, &[1.0], 1e-9, 10.0, 60).unwrap();
        assert!((m / 10.0 - 1.0).abs() < 1e-12, "{m}");
        assert!(matches!(
            ensure_descent(1.0, &one_row(-1.0, &[1.0]), &[1.0], 1e-9, 10.0, 60),
            Err(Error::NoDescent(60))
        ));
    }

    #[test]
    fn armijo_on_quadratic() {
        let r = armijo_search(0.0, -1.0, 1.0, 0.5, 0.1, 60, |_| true, |t| Ok(t * t - t)).unwrap();
        assert_eq!((r.k, r.t), (1, 0.5));
        let r = armijo_search(0.0, -1.0, 1.0, 0.5, 0.1, 60, |_| true, |t| Ok(-t)).unwrap();
        assert_eq!(r.k, 0);
    }

    #[test]
    fn quality_veto_on_homothety() {
        let mesh = generate_primitive(Primitive::UnitSquare, 1).unwrap();
        let v = VectorFieldP1::from_fn(&mesh, |x| [x[0], x[1], 0.0]);
        let r = armijo_search(
            0.0,
            -1.0,
            1.0,
            0.5,
            0.1,
            60,
            |t| deformation_quality(&mesh, &v, t).pass,
            |t| Ok(-t),
        )
        .unwrap();
        // (1 + t)² ≤ 2 and t ≤ 0.3 first hold at t = 1/4
        assert_eq!((r.k, r.t), (2, 0.25));
        let q = deformation_quality(&mesh, &v, r.t);
        assert!((q.min_det - 1.5625).abs() < 1e-12 && (q.max_norm - 0.25).abs() < 1e-12);
        assert!(!deformation_quality(&mesh, &v, 0.5).pass);
        let q = deformation_quality(&mesh, &v, 0.125);
        assert!((q.min_det - 1.265625).abs() < 1e-12);
    }

    #[test]
    fn step_failure_after_cap() {
        let r = armijo_search(0.0, -1.0, 1.0, 0.5, 0.1, 60, |_| false, |_| Ok(0.0));
        assert!(matches!(r, Err(Error::StepFailure(60))));
    }

    #[test]
    fn merit_on_reflex_quad_is_constant_violation() {
        use crate::fem::{BoundaryCondition, Constant};
        use crate::shapecalc::StandardIntegrand;
        let mesh = SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 2.0, 0.0, 0.5, 0.5, 0.0, 2.0],
            vec![0, 1, 2, 0, 2, 3],
        )
        .unwrap();
        let problem = ProblemSpec::new(Constant(1.0), StandardIntegrand::One, BoundaryCondition::DirichletZero, 2);
        let v = VectorFieldP1::zeros(&mesh);
        let area = mesh.volume();
        for t in [0.0, 0.3, 1.0] {
            let phi = merit_value(&mesh, &v, t, 3.0, &problem, SolveOptions::default()).unwrap();
            assert!((phi - (area + 6.0)).abs() < 1e-12);
        }
        let phi = merit_value(&mesh, &v, 0.5, 0.0, &problem, SolveOptions::default()).unwrap();
        assert!((phi - area).abs() < 1e-12);
    }
}
