use super::geometry::{determinant, spectral_norm};
use super::SimplicialMesh;
use crate::error::{Error, Result};

/// Continuous piecewise-linear vector field, `dim` nodal values per vertex
/// (vertex-major).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldP1 {
    dim: usize,
    values: Vec<f64>,
}

impl VectorFieldP1 {
    pub fn zeros(mesh: &SimplicialMesh) -> Self {
        Self {
            dim: mesh.dim(),
            values: vec![0.0; mesh.dim() * mesh.num_vertices()],
        }
    }

    pub fn from_values(mesh: &SimplicialMesh, values: Vec<f64>) -> Result<Self> {
        let v = Self {
            dim: mesh.dim(),
            values,
        };
        v.check_mesh(mesh)?;
        Ok(v)
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &SimplicialMesh, f: impl Fn(&[f64]) -> [f64; 3]) -> Self {
        let d = mesh.dim();
        let mut values = Vec::with_capacity(d * mesh.num_vertices());
        for v in 0..mesh.num_vertices() {
            values.extend_from_slice(&f(mesh.point(v))[..d]);
        }
        Self { dim: d, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, v: usize) -> &[f64] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::norm_inf(&self.values)
    }

    pub(crate) fn check_mesh(&self, mesh: &SimplicialMesh) -> Result<()> {
        let expected = mesh.dim() * mesh.num_vertices();
        if self.dim != mesh.dim() || self.values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "vector field coefficients",
                expected,
                found: self.values.len(),
            });
        }
        Ok(())
    }

    /// Nodal values of cell `c` in local order.
    pub(crate) fn cell_values(&self, mesh: &SimplicialMesh, c: usize) -> [[f64; 3]; 4] {
        let mut out = [[0.0; 3]; 4];
        for (a, &v) in mesh.cell(c).iter().enumerate() {
            out[a][..self.dim].copy_from_slice(self.at(v));
        }
        out
    }
}

/// Per-cell extremes of `det(I + t DV)` and `‖t DV‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub min_det: f64,
    pub max_det: f64,
    pub max_norm: f64,
    pub pass: bool,
}

impl QualityReport {
    pub const MIN_DET: f64 = 0.5;
    pub const MAX_DET: f64 = 2.0;
    pub const MAX_NORM: f64 = 0.3;
}

pub fn deformation_quality(mesh: &SimplicialMesh, v: &VectorFieldP1, t: f64) -> QualityReport {
    let d = mesh.dim();
    let mut min_det = f64::INFINITY;
    let mut max_det = f64::NEG_INFINITY;
    let mut max_norm: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        let mut b = g.field_jacobian(&v.cell_values(mesh, c));
        for row in b.iter_mut().take(d) {
            row.iter_mut().take(d).for_each(|x| *x *= t);
        }
        max_norm = max_norm.max(spectral_norm(&b, d));
        for (i, row) in b.iter_mut().enumerate().take(d) {
            row[i] += 1.0;
        }
        let det = determinant(&b, d);
        min_det = min_det.min(det);
        max_det = max_det.max(det);
    }
    if mesh.num_cells() == 0 {
        min_det = 1.0;
        max_det = 1.0;
    }
    let pass = min_det >= QualityReport::MIN_DET
        && max_det <= QualityReport::MAX_DET
        && max_norm <= QualityReport::MAX_NORM
        && min_det.is_finite()
        && max_norm.is_finite();
    QualityReport {
        min_det,
        max_det,
        max_norm,
        pass,
    }
}

/// Moves every vertex to `x_i + t V(x_i)` after checking the deformation
/// quality bounds.
pub fn apply_deformation(
    mesh: &SimplicialMesh,
    v: &VectorFieldP1,
    t: f64,
) -> Result<SimplicialMesh> {
    v.check_mesh(mesh)?;
    let q = deformation_quality(mesh, v, t);
    if !q.pass {
        return Err(Error::QualityCheckFailed {
            min_det: q.min_det,
            max_det: q.max_det,
            max_norm: q.max_norm,
        });
    }
    mesh.displaced(v, t)
}
