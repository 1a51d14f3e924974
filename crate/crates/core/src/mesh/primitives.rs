use std::collections::HashMap;
use std::f64::consts::PI;
use std::str::FromStr;

use super::{extract_boundary, SimplicialMesh};
use crate::error::{Error, Result};

const MAX_LEVEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    /// Inscribed polygon of the unit disk (12 boundary vertices at level 0).
    UnitDisk,
    /// `[0, 1]²`
    UnitSquare,
    /// `[-1/2, 1/2]³`, six Kuhn tetrahedra at level 0.
    UnitCubeCentered,
}

impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_disk" => Ok(Self::UnitDisk),
            "unit_square" => Ok(Self::UnitSquare),
            "unit_cube_centered" => Ok(Self::UnitCubeCentered),
            other => Err(Error::UnknownPrimitive(other.to_string())),
        }
    }
}

impl Primitive {
    pub fn name(self) -> &'static str {
        match self {
            Self::UnitDisk => "unit_disk",
            Self::UnitSquare => "unit_square",
            Self::UnitCubeCentered => "unit_cube_centered",
        }
    }
}

pub fn generate_primitive(kind: Primitive, level: usize) -> Result<SimplicialMesh> {
    if level > MAX_LEVEL {
        return Err(Error::RefinementTooDeep(level));
    }
    let mut mesh = match kind {
        Primitive::UnitSquare => SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![0, 1, 2, 0, 2, 3],
        )?,
        Primitive::UnitDisk => disk_base()?,
        Primitive::UnitCubeCentered => cube_base()?,
    };
    for _ in 0..level {
        mesh = uniform_refine(&mesh)?;
        if kind == Primitive::UnitDisk {
            mesh = project_boundary_to_circle(&mesh)?;
        }
    }
    Ok(mesh)
}

/// Center, an inner hexagon at radius 1/2 and an outer 12-gon on the unit
/// circle.
fn disk_base() -> Result<SimplicialMesh> {
    let mut coords = vec![0.0, 0.0];
    for i in 0..6 {
        let a = i as f64 * PI / 3.0;
        coords.extend([0.5 * a.cos(), 0.5 * a.sin()]);
    }
    for j in 0..12 {
        let a = j as f64 * PI / 6.0;
        coords.extend([a.cos(), a.sin()]);
    }
    let inner = |i: usize| 1 + i % 6;
    let outer = |j: usize| 7 + j % 12;
    let mut cells = Vec::new();
    for i in 0..6 {
        cells.extend([0, inner(i), inner(i + 1)]);
        cells.extend([inner(i), outer(2 * i), outer(2 * i + 1)]);
        cells.extend([inner(i), outer(2 * i + 1), inner(i + 1)]);
        cells.extend([inner(i + 1), outer(2 * i + 1), outer(2 * i + 2)]);
    }
    SimplicialMesh::new(2, coords, cells)
}

fn cube_base() -> Result<SimplicialMesh> {
    let mut coords = Vec::with_capacity(24);
    for v in 0..8usize {
        coords.extend((0..3).map(|k| if v >> k & 1 == 1 { 0.5 } else { -0.5 }));
    }
    let mut cells = Vec::with_capacity(24);
    for (i, j) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
        let a = 1 << i;
        let b = a | 1 << j;
        cells.extend([0, a, b, 7]);
    }
    SimplicialMesh::new(3, coords, cells)
}

/// Triangulates a star-shaped polygon (vertices counterclockwise) with a
/// vertex at the centroid and an inner ring at half distance.
pub fn polygon_mesh(boundary: &[[f64; 2]]) -> Result<SimplicialMesh> {
    let n = boundary.len();
    if n < 3 {
        return Err(Error::InvalidMesh("polygon needs at least 3 vertices".into()));
    }
    let c = boundary
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n as f64, acc[1] + p[1] / n as f64]);
    let mut coords = vec![c[0], c[1]];
    for p in boundary {
        coords.extend([c[0] + 0.5 * (p[0] - c[0]), c[1] + 0.5 * (p[1] - c[1])]);
    }
    for p in boundary {
        coords.extend([p[0], p[1]]);
    }
    let inner = |i: usize| 1 + i % n;
    let outer = |i: usize| 1 + n + i % n;
    let mut cells = Vec::with_capacity(9 * n);
    for i in 0..n {
        cells.extend([0, inner(i), inner(i + 1)]);
        cells.extend([inner(i), outer(i), outer(i + 1)]);
        cells.extend([inner(i), outer(i + 1), inner(i + 1)]);
    }
    SimplicialMesh::new(2, coords, cells)
}

fn project_boundary_to_circle(mesh: &SimplicialMesh) -> Result<SimplicialMesh> {
    let b = extract_boundary(mesh)?;
    let mut coords = mesh.coords().to_vec();
    for &v in &b.boundary_vertices {
        let r = coords[2 * v].hypot(coords[2 * v + 1]);
        coords[2 * v] /= r;
        coords[2 * v + 1] /= r;
    }
    mesh.with_coords(coords)
}

/// Red refinement: triangles into four, tetrahedra into eight (the interior
/// octahedron is split along its shortest diagonal).
pub fn uniform_refine(mesh: &SimplicialMesh) -> Result<SimplicialMesh> {
    let d = mesh.dim();
    let mut coords = mesh.coords().to_vec();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, coords: &mut Vec<f64>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            let idx = coords.len() / d;
            for k in 0..d {
                let x = 0.5 * (coords[a * d + k] + coords[b * d + k]);
                coords.push(x);
            }
            idx
        })
    };
    let mut cells = Vec::with_capacity(mesh.cell_indices().len() * if d == 2 { 4 } else { 8 });
    for cell in mesh.cells() {
        if d == 2 {
            let [v0, v1, v2] = [cell[0], cell[1], cell[2]];
            let m01 = midpoint(v0, v1, &mut coords);
            let m12 = midpoint(v1, v2, &mut coords);
            let m02 = midpoint(v0, v2, &mut coords);
            cells.extend([v0, m01, m02, m01, v1, m12, m02, m12, v2, m01, m12, m02]);
        } else {
            let v = [cell[0], cell[1], cell[2], cell[3]];
            let mut m = [[0usize; 4]; 4];
            for a in 0..4 {
                for b in a + 1..4 {
                    let idx = midpoint(v[a], v[b], &mut coords);
                    m[a][b] = idx;
                    m[b][a] = idx;
                }
            }
            for a in 0..4 {
                let mut child = [m[a][0], m[a][1], m[a][2], m[a][3]];
                child[a] = v[a];
                cells.extend(child);
            }
            // opposite midpoint pairs of the inner octahedron
            let pairs = [(m[0][2], m[1][3]), (m[0][1], m[2][3]), (m[0][3], m[1][2])];
            let len = |(p, q): (usize, usize)| {
                (0..3)
                    .map(|k| (coords[p * 3 + k] - coords[q * 3 + k]).powi(2))
                    .sum::<f64>()
            };
            let mut best = 0;
            for k in 1..3 {
                if len(pairs[k]) < len(pairs[best]) - 1e-14 * len(pairs[best]) {
                    best = k;
                }
            }
            let (p, pp) = pairs[best];
            let (q, qq) = pairs[(best + 1) % 3];
            let (r, rr) = pairs[(best + 2) % 3];
            for (a, b) in [(q, r), (r, qq), (qq, rr), (rr, q)] {
                cells.extend([p, pp, a, b]);
            }
        }
    }
    // orientation of the octahedron children is fixed by the constructor
    SimplicialMesh::new(d, coords, cells)
}
