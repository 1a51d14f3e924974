//! Convexity constraints on the boundary of a simplicial mesh.
//!
//! In 2D there is one constraint per boundary vertex,
//! `Cᵢ = (x⁽ⁱ⁻¹⁾ - x⁽ⁱ⁾) × (x⁽ⁱ⁺¹⁾ - x⁽ⁱ⁾)` along the counterclockwise loop.
//! In 3D there is one per boundary edge `i < j`: with `l` the opposite
//! vertex of the outward facet containing `i → j` and `r` that of the facet
//! containing `j → i`, `C = -(xₗ - xᵢ)·((xⱼ - xᵢ) × (xᵣ - xᵢ))`.
//! The domain is convex iff every `C ≤ 0`.

mod hull;

pub use hull::convexify;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{extract_boundary, BoundaryTopology, SimplicialMesh};

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub values: Vec<f64>,
    /// `N × (d·nv)` Jacobian in vertex-major ordering `d·v + k`.
    pub jacobian: Option<CsrMatrix>,
    /// Vertices involved in each constraint: `[prev, vertex, next]` in 2D,
    /// `[i, j, l, r]` in 3D.
    pub index_map: Vec<Vec<usize>>,
}

impl ConstraintSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max Cᵢ`, or `-∞` without constraints.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ max(Cᵢ, 0)`
    pub fn positive_part_sum(&self) -> f64 {
        self.values.iter().map(|c| c.max(0.0)).sum()
    }
}

pub fn constraint_values(mesh: &SimplicialMesh) -> Result<ConstraintSystem> {
    let b = extract_boundary(mesh)?;
    constraints_on(mesh, &b, false)
}

pub fn constraint_jacobian(mesh: &SimplicialMesh) -> Result<ConstraintSystem> {
    let b = extract_boundary(mesh)?;
    constraints_on(mesh, &b, true)
}

/// Constraints with a precomputed boundary.
pub fn constraints_on(
    mesh: &SimplicialMesh,
    boundary: &BoundaryTopology,
    with_jacobian: bool,
) -> Result<ConstraintSystem> {
    if mesh.dim() == 2 {
        Ok(constraints_2d(mesh, boundary, with_jacobian))
    } else {
        constraints_3d(mesh, boundary, with_jacobian)
    }
}

pub fn is_convex(mesh: &SimplicialMesh, tol: f64) -> Result<bool> {
    Ok(constraint_values(mesh)?.values.iter().all(|&c| c <= tol))
}

fn constraints_2d(mesh: &SimplicialMesh, b: &BoundaryTopology, jac: bool) -> ConstraintSystem {
    let lp = &b.boundary_vertices;
    let n = lp.len();
    let nv = mesh.num_vertices();
    let mut values = Vec::with_capacity(n);
    let mut index_map = Vec::with_capacity(n);
    let mut tb = TripletBuilder::with_capacity(n, 2 * nv, if jac { 6 * n } else { 0 });
    for i in 0..n {
        let (p, c, q) = (lp[(i + n - 1) % n], lp[i], lp[(i + 1) % n]);
        let (xp, xc, xq) = (mesh.point(p), mesh.point(c), mesh.point(q));
        let a = [xp[0] - xc[0], xp[1] - xc[1]];
        let e = [xq[0] - xc[0], xq[1] - xc[1]];
        values.push(a[0] * e[1] - a[1] * e[0]);
        index_map.push(vec![p, c, q]);
        if jac {
            tb.push(i, 2 * p, e[1]);
            tb.push(i, 2 * p + 1, -e[0]);
            tb.push(i, 2 * q, -a[1]);
            tb.push(i, 2 * q + 1, a[0]);
            tb.push(i, 2 * c, a[1] - e[1]);
            tb.push(i, 2 * c + 1, e[0] - a[0]);
        }
    }
    ConstraintSystem {
        values,
        jacobian: jac.then(|| tb.build()),
        index_map,
    }
}

fn sub(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(u: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn dot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Boundary edges `(i, j, l, r)` with `i < j`, sorted.
pub(crate) fn outer_edges(b: &BoundaryTopology) -> Result<Vec<[usize; 4]>> {
    let mut third: HashMap<(usize, usize), usize> = HashMap::new();
    for f in b.facet_iter() {
        for k in 0..3 {
            let (s, t, o) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            if third.insert((s, t), o).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {s}->{t} appears twice with the same orientation"
                )));
            }
        }
    }
    let mut edges = Vec::with_capacity(third.len() / 2);
    for (&(i, j), &l) in &third {
        if i > j {
            continue;
        }
        let r = *third.get(&(j, i)).ok_or_else(|| {
            Error::InvalidMesh(format!("boundary edge {i}-{j} has a single adjacent facet"))
        })?;
        edges.push([i, j, l, r]);
    }
    edges.sort_unstable();
    Ok(edges)
}

fn constraints_3d(mesh: &SimplicialMesh, b: &BoundaryTopology, jac: bool) -> Result<ConstraintSystem> {
    let edges = outer_edges(b)?;
    let n = edges.len();
    let nv = mesh.num_vertices();
    let mut values = Vec::with_capacity(n);
    let mut index_map = Vec::with_capacity(n);
    let mut tb = TripletBuilder::with_capacity(n, 3 * nv, if jac { 12 * n } else { 0 });
    for (row, &[i, j, l, r]) in edges.iter().enumerate() {
        let xi = mesh.point(i);
        let a = sub(mesh.point(l), xi);
        let bb = sub(mesh.point(j), xi);
        let c = sub(mesh.point(r), xi);
        let bc = cross(&bb, &c);
        values.push(-dot(&a, &bc));
        index_map.push(vec![i, j, l, r]);
        if jac {
            let ca = cross(&c, &a);
            let ab = cross(&a, &bb);
            for k in 0..3 {
                tb.push(row, 3 * l + k, -bc[k]);
                tb.push(row, 3 * j + k, -ca[k]);
                tb.push(row, 3 * r + k, -ab[k]);
                tb.push(row, 3 * i + k, bc[k] + ca[k] + ab[k]);
            }
        }
    }
    Ok(ConstraintSystem {
        values,
        jacobian: jac.then(|| tb.build()),
        index_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, polygon_mesh, Primitive};

    fn loop_values(poly: &[[f64; 2]]) -> Vec<(usize, f64)> {
        let mesh = polygon_mesh(poly).unwrap();
        let cs = constraint_values(&mesh).unwrap();
        cs.index_map.iter().map(|ix| ix[1]).zip(cs.values).collect()
    }

    #[test]
    fn square_is_minus_one() {
        let sq = generate_primitive(Primitive::UnitSquare, 0).unwrap();
        let cs = constraint_values(&sq).unwrap();
        assert_eq!(cs.len(), 4);
        assert!(cs.values.iter().all(|&c| (c + 1.0).abs() < 1e-14));
        assert!(is_convex(&sq, 0.0).unwrap());
    }

    #[test]
    fn square_jacobian_by_hand() {
        let sq = generate_primitive(Primitive::UnitSquare, 0).unwrap();
        let cs = constraint_jacobian(&sq).unwrap();
        let jac = cs.jacobian.clone().unwrap();
        let row = cs
            .index_map
            .iter()
            .position(|ix| sq.point(ix[1]) == [0.0, 0.0])
            .unwrap();
        let [p, c, q] = [cs.index_map[row][0], cs.index_map[row][1], cs.index_map[row][2]];
        assert_eq!(sq.point(p), [0.0, 1.0]);
        assert_eq!(sq.point(q), [1.0, 0.0]);
        // C = (p1 - c1)(q2 - c2) - (p2 - c2)(q1 - c1)
        assert_eq!(jac.get(row, 2 * p), 0.0);
        assert_eq!(jac.get(row, 2 * p + 1), -1.0);
        assert_eq!(jac.get(row, 2 * q), -1.0);
        assert_eq!(jac.get(row, 2 * q + 1), 0.0);
        assert_eq!(jac.get(row, 2 * c), 1.0);
        assert_eq!(jac.get(row, 2 * c + 1), 1.0);
        assert_eq!(jac.row(row).0.len(), 6);
    }

    #[test]
    fn reflex_vertex_detected() {
        let quad = [[0.0, 0.0], [2.0, 0.0], [0.5, 0.5], [0.0, 2.0]];
        let mesh = reflex_quad();
        let cs = constraint_values(&mesh).unwrap();
        let at = cs
            .index_map
            .iter()
            .position(|ix| mesh.point(ix[1]) == quad[2])
            .unwrap();
        assert!((cs.values[at] - 2.0).abs() < 1e-14);
        assert!(!is_convex(&mesh, 1.99).unwrap());
        assert!(is_convex(&mesh, 2.0).unwrap());
    }

    pub(super) fn reflex_quad() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 2.0, 0.0, 0.5, 0.5, 0.0, 2.0],
            vec![0, 1, 2, 0, 2, 3],
        )
        .unwrap()
    }

    #[test]
    fn collinear_vertex_is_zero() {
        let vals = loop_values(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let zeros = vals.iter().filter(|(_, c)| c.abs() < 1e-15).count();
        assert_eq!(zeros, 1);
    }

    #[test]
    fn regular_polygon_closed_form() {
        for n in [3usize, 5, 8, 13] {
            let poly: Vec<[f64; 2]> = (0..n)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    [t.cos(), t.sin()]
                })
                .collect();
            let side = 2.0 * (std::f64::consts::PI / n as f64).sin();
            let expect = -(2.0 * std::f64::consts::PI / n as f64).sin() * side * side;
            for (_, c) in loop_values(&poly) {
                assert!((c - expect).abs() < 1e-13, "n={n}: {c} vs {expect}");
            }
        }
    }

    #[test]
    fn cube_edges_are_convex() {
        let cube = generate_primitive(Primitive::UnitCubeCentered, 1).unwrap();
        let cs = constraint_jacobian(&cube).unwrap();
        assert!(cs.max_value() <= 1e-14);
        let jac = cs.jacobian.clone().unwrap();
        assert!((0..cs.len()).all(|r| jac.row(r).0.len() == 12));
        // edges on the cube's 12 creases are strictly convex, the rest flat
        let strict = cs.values.iter().filter(|&&c| c < -1e-12).count();
        assert_eq!(strict, 24);
    }

    #[test]
    fn cube_corner_pushed_and_pulled() {
        let cube = generate_primitive(Primitive::UnitCubeCentered, 0).unwrap();
        let corner = (0..8).find(|&v| cube.point(v) == [0.5, 0.5, 0.5]).unwrap();
        let moved = |s: f64| {
            let mut x = cube.coords().to_vec();
            for k in 0..3 {
                x[3 * corner + k] += s;
            }
            cube.with_coords(x).unwrap()
        };
        assert!(constraint_values(&moved(0.1)).unwrap().max_value() <= 1e-14);
        assert!(constraint_values(&moved(-0.1)).unwrap().max_value() > 0.0);
    }
}
