//! Simplicial meshes of convex polygons (triangles) and polyhedra
//! (tetrahedra): construction, boundary topology, uniform refinement and
//! vertex deformation.

mod boundary;
mod deformation;
mod geometry;
mod io;
mod primitives;

use std::collections::HashMap;

pub use boundary::{extract_boundary, BoundaryTopology};
pub use deformation::{apply_deformation, deformation_quality, QualityReport, VectorFieldP1};
pub use geometry::{spectral_norm, CellGeometry};
pub(crate) use geometry::quadrature as geometry_quadrature;
pub use io::{load_mesh, write_mesh};
pub use primitives::{generate_primitive, polygon_mesh, uniform_refine, Primitive};

use crate::error::{Error, Result};

/// Conforming simplicial mesh with positively oriented cells.
///
/// Coordinates are stored vertex-major (`dim` reals per vertex); cells as
/// `dim + 1` vertex indices each.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
}

impl SimplicialMesh {
    /// Builds a mesh, re-orienting negatively oriented cells and validating
    /// index ranges, vertex usage, non-degeneracy and conformity.
    pub fn new(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidMesh(format!("dimension {dim} not in {{2, 3}}")));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidMesh(format!(
                "coordinate count {} is not a multiple of {dim}",
                coords.len()
            )));
        }
        if cells.len() % (dim + 1) != 0 {
            return Err(Error::InvalidMesh(format!(
                "cell index count {} is not a multiple of {}",
                cells.len(),
                dim + 1
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let nv = coords.len() / dim;
        let mut used = vec![false; nv];
        for (c, cell) in cells.chunks(dim + 1).enumerate() {
            for (k, &v) in cell.iter().enumerate() {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references vertex {v}, but there are only {nv} vertices"
                    )));
                }
                if cell[..k].contains(&v) {
                    return Err(Error::DegenerateCell { cell: c });
                }
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any cell")));
        }
        let mut mesh = Self { dim, coords, cells };
        mesh.orient_cells()?;
        mesh.check_conformity()?;
        Ok(mesh)
    }

    fn orient_cells(&mut self) -> Result<()> {
        let n = self.dim + 1;
        for c in 0..self.num_cells() {
            let det = self.signed_jacobian(c);
            if det.abs() <= self.degeneracy_threshold(c) {
                return Err(Error::DegenerateCell { cell: c });
            }
            if det < 0.0 {
                self.cells.swap(c * n, c * n + 1);
            }
        }
        Ok(())
    }

    fn degeneracy_threshold(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let mut h: f64 = 0.0;
        for a in 0..cell.len() {
            for b in a + 1..cell.len() {
                h = h.max(dist(self.point(cell[a]), self.point(cell[b])));
            }
        }
        1e-13 * h.powi(self.dim as i32)
    }

    fn check_conformity(&self) -> Result<()> {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for cell in self.cells() {
            for skip in 0..cell.len() {
                let mut f: Vec<usize> = (0..cell.len())
                    .filter(|&k| k != skip)
                    .map(|k| cell[k])
                    .collect();
                f.sort_unstable();
                *count.entry(f).or_default() += 1;
            }
        }
        let mut bad: Vec<_> = count.into_iter().filter(|(_, c)| *c > 2).collect();
        bad.sort();
        match bad.into_iter().next() {
            Some((facet, count)) => Err(Error::NonConforming { facet, count }),
            None => Ok(()),
        }
    }

    /// Same connectivity, new coordinates. Fails if any cell loses positive
    /// orientation.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != self.coords.len() {
            return Err(Error::DimensionMismatch {
                what: "vertex coordinates",
                expected: self.coords.len(),
                found: coords.len(),
            });
        }
        let mesh = Self {
            dim: self.dim,
            coords,
            cells: self.cells.clone(),
        };
        for c in 0..mesh.num_cells() {
            if mesh.signed_jacobian(c) <= mesh.degeneracy_threshold(c) {
                return Err(Error::DegenerateCell { cell: c });
            }
        }
        Ok(mesh)
    }

    /// Vertices moved to `x_i + t V(x_i)` without the quality check.
    pub fn displaced(&self, v: &VectorFieldP1, t: f64) -> Result<Self> {
        v.check_mesh(self)?;
        let coords = self
            .coords
            .iter()
            .zip(v.values())
            .map(|(x, d)| x + t * d)
            .collect();
        self.with_coords(coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.cells.chunks(self.dim + 1)
    }

    pub fn cell_indices(&self) -> &[usize] {
        &self.cells
    }

    pub fn geometry(&self, c: usize) -> CellGeometry {
        CellGeometry::new(self, c)
    }

    fn signed_jacobian(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let x0 = self.point(cell[0]);
        let e = |k: usize, i: usize| self.point(cell[k])[i] - x0[i];
        if self.dim == 2 {
            e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0)
        } else {
            e(1, 0) * (e(2, 1) * e(3, 2) - e(2, 2) * e(3, 1))
                - e(1, 1) * (e(2, 0) * e(3, 2) - e(2, 2) * e(3, 0))
                + e(1, 2) * (e(2, 0) * e(3, 1) - e(2, 1) * e(3, 0))
        }
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        let f = if self.dim == 2 { 2.0 } else { 6.0 };
        self.signed_jacobian(c) / f
    }

    pub fn volume(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.coords.chunks(self.dim) {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(&lo, &hi)
    }

    pub fn centroid_of_vertices(&self, vertices: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for &v in vertices {
            for (ck, pk) in c.iter_mut().zip(self.point(v)) {
                *ck += pk;
            }
        }
        c.iter_mut().for_each(|x| *x /= vertices.len().max(1) as f64);
        c
    }

    /// Unique undirected edges `(a, b)` with `a < b`, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for cell in self.cells() {
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    let e = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                    if seen.insert(e, ()).is_none() {
                        out.push(e);
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![0, 1, 2, 0, 2, 3],
        )
        .unwrap()
    }

    #[test]
    fn clockwise_cell_is_reoriented() {
        let m = SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0, 2, 1]).unwrap();
        assert_eq!(m.cell_volume(0), 0.5);
    }

    #[test]
    fn rejects_degenerate_and_unused() {
        let err = SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0], vec![0, 1, 2]);
        assert_eq!(err.unwrap_err(), Error::DegenerateCell { cell: 0 });
        let err = SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0],
            vec![0, 1, 2],
        );
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
        let err = SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0, 1, 3]);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn facet_in_three_cells_is_nonconforming() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.5, 1.0, 0.5, -1.0, 0.5, 2.0];
        let err = SimplicialMesh::new(2, coords, vec![0, 1, 2, 0, 3, 1, 0, 1, 4]).unwrap_err();
        assert_eq!(
            err,
            Error::NonConforming {
                facet: vec![0, 1],
                count: 3
            }
        );
    }

    #[test]
    fn square_basics() {
        let m = square();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_cells(), 2);
        assert!((m.volume() - 1.0).abs() < 1e-15);
        assert_eq!(m.edges().len(), 5);
        assert!((m.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inverting_deformation_is_rejected() {
        let m = square();
        let mut coords = m.coords().to_vec();
        coords[4] = -1.0; // vertex 2 pushed across the diagonal
        coords[5] = -1.0;
        assert!(m.with_coords(coords).is_err());
    }
}
