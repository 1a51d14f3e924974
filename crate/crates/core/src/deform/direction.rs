use std::str::FromStr;

use nalgebra::DMatrix;

use super::{assemble_elasticity, assemble_normal_trace, BoundaryScalarField, ElasticityParams};
use crate::convexity::ConstraintSystem;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, EnvelopeCholesky, TripletBuilder};
use crate::mesh::{extract_boundary, BoundaryTopology, SimplicialMesh, VectorFieldP1};
use crate::qp::{solve_qp_warm, QpSettings, QpSolution, QuadraticProgram, WarmStart};
use crate::shapecalc::ShapeGradient;

/// How the normal-force restriction enters the QP.
///
/// `Coupled` keeps `z = (V, F)` with the equality rows `E V = N F`;
/// `Reduced` eliminates `V = E⁻¹ N F` and solves for `F` alone, which is
/// much smaller because `F` lives on the boundary only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QpStrategy {
    Coupled,
    #[default]
    Reduced,
}

impl FromStr for QpStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Self::Coupled),
            "reduced" => Ok(Self::Reduced),
            _ => Err(Error::InvalidParameter(format!("unknown QP strategy '{s}'"))),
        }
    }
}

/// Coupled direction QP over `z = (V, F)`:
///
/// ```text
/// minimize    ½ Vᵀ E V + gᵀ V
/// subject to  C + t0 DC V ≤ 0,   E V - N F = 0
/// ```
pub fn build_direction_qp(
    e: &CsrMatrix,
    n: &CsrMatrix,
    grad: &ShapeGradient,
    constraints: &ConstraintSystem,
    t0: f64,
) -> Result<QuadraticProgram> {
    let nv = e.nrows();
    let nb = n.ncols();
    check_dims(nv, n, grad, constraints)?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
    }
    let nz = nv + nb;
    let mut h = TripletBuilder::with_capacity(nz, nz, e.nnz());
    for (i, j, v) in e.iter() {
        h.push(i, j, v);
    }
    let mut linear = grad.values().to_vec();
    linear.resize(nz, 0.0);
    let m = constraints.len();
    let mut a = TripletBuilder::new(m, nz);
    if let Some(dc) = &constraints.jacobian {
        for (i, j, v) in dc.iter() {
            a.push(i, j, t0 * v);
        }
    }
    let b: Vec<f64> = constraints.values.iter().map(|c| -c).collect();
    let mut eq = TripletBuilder::with_capacity(nv, nz, e.nnz() + n.nnz());
    for (i, j, v) in e.iter() {
        eq.push(i, j, v);
    }
    for (i, j, v) in n.iter() {
        eq.push(i, nv + j, -v);
    }
    QuadraticProgram::new(h.build(), linear, a.build(), b, eq.build(), vec![0.0; nv])
}

fn check_dims(nv: usize, n: &CsrMatrix, grad: &ShapeGradient, cs: &ConstraintSystem) -> Result<()> {
    if n.nrows() != nv {
        return Err(Error::DimensionMismatch {
            what: "normal-trace rows",
            expected: nv,
            found: n.nrows(),
        });
    }
    if grad.values().len() != nv {
        return Err(Error::DimensionMismatch {
            what: "shape gradient",
            expected: nv,
            found: grad.values().len(),
        });
    }
    if !cs.is_empty() {
        match &cs.jacobian {
            None => return Err(Error::InvalidParameter("constraint Jacobian missing".into())),
            Some(dc) if dc.ncols() != nv || dc.nrows() != cs.len() => {
                return Err(Error::DimensionMismatch {
                    what: "constraint Jacobian",
                    expected: nv,
                    found: dc.ncols(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Elasticity and normal-trace operators of one mesh, with `E` factored.
pub struct DirectionOperators {
    pub boundary: BoundaryTopology,
    pub elasticity: CsrMatrix,
    pub normal_trace: CsrMatrix,
    factor: EnvelopeCholesky,
    /// `E⁻¹ N`, column-major
    basis: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct DirectionSolution {
    pub v: VectorFieldP1,
    pub f: BoundaryScalarField,
    /// Multipliers of the linearized convexity rows.
    pub ineq_multipliers: Vec<f64>,
    /// Multipliers `W` of `E V = N F`.
    pub eq_multipliers: Vec<f64>,
    pub qp: QpSolution,
}

impl DirectionOperators {
    pub fn new(mesh: &SimplicialMesh, params: &ElasticityParams) -> Result<Self> {
        let boundary = extract_boundary(mesh)?;
        let elasticity = assemble_elasticity(mesh, params)?;
        let normal_trace = assemble_normal_trace(mesh, &boundary);
        let factor = EnvelopeCholesky::factor(&elasticity)?;
        let nv = elasticity.nrows();
        let nb = normal_trace.ncols();
        let nt = normal_trace.transpose();
        let mut basis = DMatrix::zeros(nv, nb);
        let mut col = vec![0.0; nv];
        for j in 0..nb {
            col.iter_mut().for_each(|c| *c = 0.0);
            let (idx, vals) = nt.row(j);
            for (&i, &v) in idx.iter().zip(vals) {
                col[i] = v;
            }
            factor.solve_in_place(&mut col);
            basis.column_mut(j).copy_from_slice(&col);
        }
        Ok(Self {
            boundary,
            elasticity,
            normal_trace,
            factor,
            basis,
        })
    }

    /// `V = E⁻¹ N F`
    pub fn field_from_force(&self, f: &[f64]) -> Vec<f64> {
        (&self.basis * nalgebra::DVector::from_column_slice(f)).as_slice().to_vec()
    }

    /// Reduced QP in `F`: Hessian `Nᵀ E⁻¹ N`, linear term `(E⁻¹N)ᵀ g`,
    /// rows `t0 DC E⁻¹ N`.
    pub fn reduced_qp(&self, grad: &ShapeGradient, cs: &ConstraintSystem, t0: f64) -> Result<QuadraticProgram> {
        let nv = self.elasticity.nrows();
        check_dims(nv, &self.normal_trace, grad, cs)?;
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
        }
        let nb = self.basis.ncols();
        let mut h = DMatrix::zeros(nb, nb);
        let nt = self.normal_trace.transpose();
        for i in 0..nb {
            let (idx, vals) = nt.row(i);
            for j in 0..nb {
                h[(i, j)] = idx.iter().zip(vals).map(|(&k, v)| v * self.basis[(k, j)]).sum();
            }
        }
        let h = (&h + h.transpose()) * 0.5;
        let g = nalgebra::DVector::from_column_slice(grad.values());
        let linear = (self.basis.transpose() * g).as_slice().to_vec();
        let m = cs.len();
        let mut a = DMatrix::zeros(m, nb);
        if let Some(dc) = &cs.jacobian {
            for r in 0..m {
                let (idx, vals) = dc.row(r);
                for j in 0..nb {
                    a[(r, j)] = t0 * idx.iter().zip(vals).map(|(&k, v)| v * self.basis[(k, j)]).sum::<f64>();
                }
            }
        }
        let b = cs.values.iter().map(|c| -c).collect();
        QuadraticProgram::inequality_only(CsrMatrix::from_dense(&h), linear, CsrMatrix::from_dense(&a), b)
    }

    pub fn solve(
        &self,
        mesh: &SimplicialMesh,
        grad: &ShapeGradient,
        cs: &ConstraintSystem,
        t0: f64,
        strategy: QpStrategy,
        settings: &QpSettings,
        warm: Option<&WarmStart>,
    ) -> Result<DirectionSolution> {
        let nv = self.elasticity.nrows();
        let nb = self.basis.ncols();
        match strategy {
            QpStrategy::Reduced => {
                let qp = self.reduced_qp(grad, cs, t0)?;
                let warm = warm.filter(|w| w.primal.len() == nb && w.ineq_multipliers.len() == cs.len());
                let sol = solve_qp_warm(&qp, settings, warm)?;
                let v = self.field_from_force(&sol.primal);
                // W = -V - E⁻¹(g + t0 DCᵀλ)
                let mut r = grad.values().to_vec();
                if let Some(dc) = &cs.jacobian {
                    for (x, y) in r.iter_mut().zip(dc.transpose_mul_vec(&sol.ineq_multipliers)) {
                        *x += t0 * y;
                    }
                }
                self.factor.solve_in_place(&mut r);
                let w = r.iter().zip(&v).map(|(a, b)| -a - b).collect();
                Ok(DirectionSolution {
                    v: VectorFieldP1::from_values(mesh, v)?,
                    f: BoundaryScalarField::from_values(&self.boundary, sol.primal.clone())?,
                    ineq_multipliers: sol.ineq_multipliers.clone(),
                    eq_multipliers: w,
                    qp: sol,
                })
            }
            QpStrategy::Coupled => {
                let qp = build_direction_qp(&self.elasticity, &self.normal_trace, grad, cs, t0)?;
                let warm = warm.filter(|w| w.primal.len() == nv + nb && w.ineq_multipliers.len() == cs.len());
                let sol = solve_qp_warm(&qp, settings, warm)?;
                Ok(DirectionSolution {
                    v: VectorFieldP1::from_values(mesh, sol.primal[..nv].to_vec())?,
                    f: BoundaryScalarField::from_values(&self.boundary, sol.primal[nv..].to_vec())?,
                    ineq_multipliers: sol.ineq_multipliers.clone(),
                    eq_multipliers: sol.eq_multipliers.clone(),
                    qp: sol,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexity::{constraint_jacobian, constraints_on};
    use crate::mesh::{generate_primitive, Primitive};
    use crate::qp::QpStatus;

    fn random_grad(mesh: &SimplicialMesh, seed: u64) -> ShapeGradient {
        let mut s = seed;
        let vals = (0..mesh.dim() * mesh.num_vertices())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 10.0
            })
            .collect();
        ShapeGradient::from_values(mesh.dim(), vals)
    }

    #[test]
    fn zero_gradient_gives_zero_direction() {
        let mesh = generate_primitive(Primitive::UnitDisk, 1).unwrap();
        let ops = DirectionOperators::new(&mesh, &ElasticityParams::default()).unwrap();
        let cs = constraints_on(&mesh, &ops.boundary, true).unwrap();
        let g = ShapeGradient::from_values(2, vec![0.0; 2 * mesh.num_vertices()]);
        for strategy in [QpStrategy::Coupled, QpStrategy::Reduced] {
            let sol = ops.solve(&mesh, &g, &cs, 1.0, strategy, &QpSettings::default(), None).unwrap();
            assert_eq!(sol.qp.status, QpStatus::Solved);
            assert!(sol.v.max_abs() < 1e-10);
            assert!(sol.f.values().iter().all(|f| f.abs() < 1e-10));
        }
    }

    #[test]
    fn strategies_agree() {
        let mesh = generate_primitive(Primitive::UnitDisk, 1).unwrap();
        let ops = DirectionOperators::new(&mesh, &ElasticityParams::default()).unwrap();
        let cs = constraints_on(&mesh, &ops.boundary, true).unwrap();
        let g = random_grad(&mesh, 7);
        let s = QpSettings::default();
        let a = ops.solve(&mesh, &g, &cs, 1.0, QpStrategy::Coupled, &s, None).unwrap();
        let b = ops.solve(&mesh, &g, &cs, 1.0, QpStrategy::Reduced, &s, None).unwrap();
        assert_eq!(a.qp.status, QpStatus::Solved);
        assert_eq!(b.qp.status, QpStatus::Solved);
        let scale = b.v.max_abs();
        for (x, y) in a.v.values().iter().zip(b.v.values()) {
            assert!((x - y).abs() <= 1e-6 * scale, "{x} {y}");
        }
        for (x, y) in a.ineq_multipliers.iter().zip(&b.ineq_multipliers) {
            assert!((x - y).abs() <= 1e-6 * (1.0 + y.abs()));
        }
        for (x, y) in a.eq_multipliers.iter().zip(&b.eq_multipliers) {
            assert!((x - y).abs() <= 1e-6 * (1.0 + y.abs()));
        }
        assert!(b.ineq_multipliers.iter().any(|&l| l > 1e-8), "no active constraint exercised");
    }

    #[test]
    fn unconstrained_direction_is_normal_force_field() {
        let mesh = generate_primitive(Primitive::UnitCubeCentered, 1).unwrap();
        let ops = DirectionOperators::new(&mesh, &ElasticityParams::default()).unwrap();
        let empty = ConstraintSystem {
            values: vec![],
            jacobian: Some(CsrMatrix::zeros(0, 3 * mesh.num_vertices())),
            index_map: vec![],
        };
        let g = random_grad(&mesh, 3);
        let qp = build_direction_qp(&ops.elasticity, &ops.normal_trace, &g, &empty, 1.0).unwrap();
        let sol = crate::qp::solve_qp(&qp, 1e-8, 200_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        let nv = ops.elasticity.nrows();
        let ev = ops.elasticity.mul_vec(&sol.primal[..nv]);
        let nf = ops.normal_trace.mul_vec(&sol.primal[nv..]);
        let res = ev.iter().zip(&nf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(res <= 1e-8);
    }

    #[test]
    fn reflex_rows_are_pushed_back() {
        let mesh = SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 2.0, 0.0, 0.5, 0.5, 0.0, 2.0],
            vec![0, 1, 2, 0, 2, 3],
        )
        .unwrap();
        let ops = DirectionOperators::new(&mesh, &ElasticityParams::default()).unwrap();
        let cs = constraint_jacobian(&mesh).unwrap();
        let g = ShapeGradient::from_values(2, vec![0.0; 2 * mesh.num_vertices()]);
        let sol = ops
            .solve(&mesh, &g, &cs, 1.0, QpStrategy::Reduced, &QpSettings::default(), None)
            .unwrap();
        let dv = cs.jacobian.as_ref().unwrap().mul_vec(sol.v.values());
        let mut violated = 0;
        for (c, d) in cs.values.iter().zip(&dv) {
            assert!(c + d <= 1e-8);
            if *c > 0.0 {
                violated += 1;
                assert!(*d < 0.0);
            }
        }
        assert_eq!(violated, 1);
    }
}
