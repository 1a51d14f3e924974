//! The direction-finding problem: elasticity inner product on P1 vector
//! fields, the boundary normal-trace operator and the convex QP whose
//! solution is the descent direction.

mod direction;

pub use direction::{
    build_direction_qp, DirectionOperators, DirectionSolution, QpStrategy,
};

use crate::error::{Error, Result};
use crate::fem::assemble_mass;
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{BoundaryTopology, SimplicialMesh};

/// Lamé parameters `μ`, `λ` and the zero-order damping `δ` of
/// `ℰ(V, W) = ∫ 2μ ε(V):ε(W) + λ tr ε(V) tr ε(W) + δ V·W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityParams {
    pub mu: f64,
    pub lambda: f64,
    pub delta: f64,
}

// A small δ leaves rigid translations nearly free in the metric and the
// reduced Hessian badly conditioned (κ ≈ 750 on the coarse disk at δ = 0.2).
impl Default for ElasticityParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda: 0.0,
            delta: 10.0,
        }
    }
}

impl ElasticityParams {
    /// `μ > 0`, `δ > 0` and `λ ≥ 0`; together these keep `ℰ` coercive.
    pub fn new(mu: f64, lambda: f64, delta: f64) -> Result<Self> {
        let p = Self { mu, lambda, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu > 0.0
            && self.delta > 0.0
            && self.lambda >= 0.0
            && self.mu.is_finite()
            && self.lambda.is_finite()
            && self.delta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "elasticity parameters need mu > 0, delta > 0, lambda >= 0 (got {self:?})"
            )))
        }
    }
}

/// Elasticity matrix on vertex-major vector dofs `d·v + k`.
pub fn assemble_elasticity(mesh: &SimplicialMesh, params: &ElasticityParams) -> Result<CsrMatrix> {
    params.validate()?;
    assemble(mesh, params)
}

fn assemble(mesh: &SimplicialMesh, params: &ElasticityParams) -> Result<CsrMatrix> {
    let d = mesh.dim();
    let k = d + 1;
    let n = d * mesh.num_vertices();
    let mut tb = TripletBuilder::with_capacity(n, n, mesh.num_cells() * k * k * d * d);
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        if !(g.volume > 0.0 && g.volume.is_finite()) {
            return Err(Error::DegenerateCell { cell: c });
        }
        let cell = mesh.cell(c);
        for a in 0..k {
            for b in 0..k {
                let (ga, gb) = (&g.grads[a], &g.grads[b]);
                let gg: f64 = (0..d).map(|i| ga[i] * gb[i]).sum();
                for p in 0..d {
                    for q in 0..d {
                        let mut v = params.mu * ga[q] * gb[p] + params.lambda * ga[p] * gb[q];
                        if p == q {
                            v += params.mu * gg;
                        }
                        tb.push(d * cell[a] + p, d * cell[b] + q, g.volume * v);
                    }
                }
            }
        }
    }
    let mass = assemble_mass(mesh)?;
    for (i, j, m) in mass.iter() {
        for p in 0..d {
            tb.push(d * i + p, d * j + p, params.delta * m);
        }
    }
    Ok(tb.build())
}

/// `N` with `Wᵀ N F = ∫_∂Ω F (W·n) ds`; rows are vector dofs, columns boundary vertices.
pub fn assemble_normal_trace(mesh: &SimplicialMesh, boundary: &BoundaryTopology) -> CsrMatrix {
    let d = mesh.dim();
    let nb = boundary.num_boundary_vertices();
    let mut tb = TripletBuilder::with_capacity(d * mesh.num_vertices(), nb, boundary.num_facets() * d * d * d);
    // exact facet mass: |F| (1 + δ_ab) / (d (d + 1))
    let denom = (d * (d + 1)) as f64;
    for (f, facet) in boundary.facet_iter().enumerate() {
        let n = boundary.facet_normals[f];
        let meas = boundary.facet_measures[f];
        for &a in facet {
            for &b in facet {
                let m = meas * if a == b { 2.0 } else { 1.0 } / denom;
                let col = boundary.boundary_index[b].expect("facet vertex on boundary");
                for k in 0..d {
                    tb.push(d * a + k, col, m * n[k]);
                }
            }
        }
    }
    tb.build()
}

/// P1 function on the boundary, one value per boundary vertex in
/// [`BoundaryTopology::boundary_vertices`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScalarField {
    values: Vec<f64>,
}

impl BoundaryScalarField {
    pub fn zeros(boundary: &BoundaryTopology) -> Self {
        Self {
            values: vec![0.0; boundary.num_boundary_vertices()],
        }
    }

    pub fn from_values(boundary: &BoundaryTopology, values: Vec<f64>) -> Result<Self> {
        if values.len() != boundary.num_boundary_vertices() {
            return Err(Error::DimensionMismatch {
                what: "boundary field",
                expected: boundary.num_boundary_vertices(),
                found: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
