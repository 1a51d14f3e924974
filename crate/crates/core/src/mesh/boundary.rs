use std::collections::HashMap;

use super::SimplicialMesh;
use crate::error::{Error, Result};

/// Boundary facets with outward orientation, their unit normals and
/// measures, and the boundary vertex numbering.
///
/// In 2D `boundary_vertices` is the counterclockwise loop starting at the
/// smallest vertex index; in 3D it is sorted ascending. Boundary scalar
/// fields are indexed in this order.
#[derive(Debug, Clone)]
pub struct BoundaryTopology {
    pub dim: usize,
    /// `dim` vertex indices per facet, ordered so that the induced normal
    /// points out of the domain.
    pub facets: Vec<usize>,
    pub facet_normals: Vec<[f64; 3]>,
    pub facet_measures: Vec<f64>,
    pub boundary_vertices: Vec<usize>,
    /// `boundary_index[v]` is the position of vertex `v` in
    /// `boundary_vertices`, if it lies on the boundary.
    pub boundary_index: Vec<Option<usize>>,
}

impl BoundaryTopology {
    pub fn num_facets(&self) -> usize {
        self.facets.len() / self.dim
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn facet_iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.facets.chunks(self.dim)
    }

    /// Counterclockwise boundary loop (2D only).
    pub fn loop_vertices(&self) -> Option<&[usize]> {
        (self.dim == 2).then_some(self.boundary_vertices.as_slice())
    }

    pub fn num_boundary_vertices(&self) -> usize {
        self.boundary_vertices.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_index[v].is_some()
    }
}

/// Outward facets of a positively oriented simplex, as local indices.
fn local_facets(dim: usize) -> &'static [&'static [usize]] {
    if dim == 2 {
        &[&[0, 1], &[1, 2], &[2, 0]]
    } else {
        &[&[1, 2, 3], &[0, 3, 2], &[0, 1, 3], &[0, 2, 1]]
    }
}

pub fn extract_boundary(mesh: &SimplicialMesh) -> Result<BoundaryTopology> {
    let d = mesh.dim();
    let mut seen: HashMap<Vec<usize>, (usize, Vec<usize>)> = HashMap::new();
    let mut order = Vec::new();
    for cell in mesh.cells() {
        for lf in local_facets(d) {
            let facet: Vec<usize> = lf.iter().map(|&k| cell[k]).collect();
            let mut key = facet.clone();
            key.sort_unstable();
            let entry = seen.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (0, facet)
            });
            entry.0 += 1;
        }
    }
    let mut facets = Vec::new();
    for key in &order {
        let (count, facet) = &seen[key];
        if *count == 1 {
            facets.extend_from_slice(facet);
        }
    }

    let nv = mesh.num_vertices();
    let boundary_vertices = if d == 2 {
        boundary_loop(&facets, nv)?
    } else {
        let mut on = vec![false; nv];
        facets.iter().for_each(|&v| on[v] = true);
        (0..nv).filter(|&v| on[v]).collect()
    };
    let mut boundary_index = vec![None; nv];
    for (i, &v) in boundary_vertices.iter().enumerate() {
        boundary_index[v] = Some(i);
    }

    let mut facet_normals = Vec::with_capacity(facets.len() / d);
    let mut facet_measures = Vec::with_capacity(facets.len() / d);
    for f in facets.chunks(d) {
        let (n, m) = facet_normal(mesh, f);
        facet_normals.push(n);
        facet_measures.push(m);
    }
    Ok(BoundaryTopology {
        dim: d,
        facets,
        facet_normals,
        facet_measures,
        boundary_vertices,
        boundary_index,
    })
}

/// Unit outward normal and measure of an outward-oriented facet.
pub(crate) fn facet_normal(mesh: &SimplicialMesh, f: &[usize]) -> ([f64; 3], f64) {
    if mesh.dim() == 2 {
        let (a, b) = (mesh.point(f[0]), mesh.point(f[1]));
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        ([dy / len, -dx / len, 0.0], len)
    } else {
        let (a, b, c) = (mesh.point(f[0]), mesh.point(f[1]), mesh.point(f[2]));
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = cross(&u, &v);
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        ([n[0] / len, n[1] / len, n[2] / len], 0.5 * len)
    }
}

pub(crate) fn cross(u: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn boundary_loop(edges: &[usize], nv: usize) -> Result<Vec<usize>> {
    let mut next = vec![usize::MAX; nv];
    let mut count = 0;
    for e in edges.chunks(2) {
        if next[e[0]] != usize::MAX {
            return Err(Error::BoundaryNotSimpleLoop(format!(
                "vertex {} starts two boundary edges",
                e[0]
            )));
        }
        next[e[0]] = e[1];
        count += 1;
    }
    let start = match (0..nv).find(|&v| next[v] != usize::MAX) {
        Some(s) => s,
        None => return Err(Error::BoundaryNotSimpleLoop("empty boundary".into())),
    };
    let mut lp = vec![start];
    let mut v = next[start];
    while v != start {
        if v == usize::MAX || lp.len() > count {
            return Err(Error::BoundaryNotSimpleLoop("open boundary chain".into()));
        }
        lp.push(v);
        v = next[v];
    }
    if lp.len() != count {
        return Err(Error::BoundaryNotSimpleLoop(format!(
            "boundary has several components ({} of {} edges in the first loop)",
            lp.len(),
            count
        )));
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn square_boundary() {
        let m = generate_primitive(Primitive::UnitSquare, 0).unwrap();
        let b = extract_boundary(&m).unwrap();
        assert_eq!(b.num_facets(), 4);
        assert_eq!(b.loop_vertices().unwrap(), &[0, 1, 2, 3]);
        for expected in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let hits = b
                .facet_normals
                .iter()
                .filter(|n| (n[0] - expected[0]).abs() + (n[1] - expected[1]).abs() < 1e-14)
                .count();
            assert_eq!(hits, 1);
        }
        let mut sum = [0.0; 2];
        for (n, m) in b.facet_normals.iter().zip(&b.facet_measures) {
            sum[0] += n[0] * m;
            sum[1] += n[1] * m;
        }
        assert!(sum[0].abs() < 1e-15 && sum[1].abs() < 1e-15);
    }

    #[test]
    fn cube_boundary_normals_are_axis_aligned() {
        let m = generate_primitive(Primitive::UnitCubeCentered, 0).unwrap();
        let b = extract_boundary(&m).unwrap();
        assert_eq!(b.num_facets(), 12);
        assert_eq!(b.num_boundary_vertices(), 8);
        for (f, n) in b.facet_iter().zip(&b.facet_normals) {
            let axis = (0..3).find(|&k| n[k].abs() > 0.5).unwrap();
            assert!((n[axis].abs() - 1.0).abs() < 1e-14);
            // outward: the facet lies on the face the normal points to
            for &v in f {
                assert!((m.point(v)[axis] - 0.5 * n[axis]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn annulus_is_rejected() {
        // square with a square hole, 8 vertices
        let coords = vec![
            0.0, 0.0, 3.0, 0.0, 3.0, 3.0, 0.0, 3.0, 1.0, 1.0, 2.0, 1.0, 2.0, 2.0, 1.0, 2.0,
        ];
        let cells = vec![
            0, 1, 5, 0, 5, 4, 1, 2, 6, 1, 6, 5, 2, 3, 7, 2, 7, 6, 3, 0, 4, 3, 4, 7,
        ];
        let m = SimplicialMesh::new(2, coords, cells).unwrap();
        assert!(matches!(
            extract_boundary(&m),
            Err(Error::BoundaryNotSimpleLoop(_))
        ));
    }
}
