use super::is_convex;
use crate::error::{Error, Result};
use crate::mesh::{extract_boundary, SimplicialMesh};

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Strict convex hull (collinear points dropped), counterclockwise, as indices into `pts`.
fn monotone_chain(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).unwrap());
    let mut hull: Vec<usize> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn self_intersecting(pts: &[[f64; 2]]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Moves the boundary of a 2D mesh onto the convex hull of its boundary
/// vertices.
///
/// Boundary vertices between two consecutive hull vertices are projected
/// orthogonally onto the hull edge; if that would reorder them they are
/// spread along the edge by arc length instead. Interior vertices do not
/// move. A mesh that is already convex is returned unchanged.
pub fn convexify(mesh: &SimplicialMesh) -> Result<SimplicialMesh> {
    if mesh.dim() != 2 {
        return Err(Error::Unsupported("convex hull repair is only available in 2D".into()));
    }
    if is_convex(mesh, 0.0)? {
        return Ok(mesh.clone());
    }
    let b = extract_boundary(mesh)?;
    let lp = &b.boundary_vertices;
    let n = lp.len();
    let pts: Vec<[f64; 2]> = lp.iter().map(|&v| [mesh.point(v)[0], mesh.point(v)[1]]).collect();
    if self_intersecting(&pts) {
        return Err(Error::SelfIntersecting);
    }
    let mut hull = monotone_chain(&pts);
    if hull.len() < 3 {
        return Err(Error::InvalidMesh("boundary vertices are collinear".into()));
    }
    let first = (0..hull.len()).min_by_key(|&k| hull[k]).unwrap();
    hull.rotate_left(first);
    if hull.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::SelfIntersecting);
    }

    let mut coords = mesh.coords().to_vec();
    for k in 0..hull.len() {
        let (ia, ib) = (hull[k], hull[(k + 1) % hull.len()]);
        let chain: Vec<usize> = (1..(ib + n - ia) % n).map(|s| (ia + s) % n).collect();
        if chain.is_empty() {
            continue;
        }
        let (a, bp) = (pts[ia], pts[ib]);
        let e = [bp[0] - a[0], bp[1] - a[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        let mut params: Vec<f64> = chain
            .iter()
            .map(|&i| ((pts[i][0] - a[0]) * e[0] + (pts[i][1] - a[1]) * e[1]) / len2)
            .collect();
        let monotone = params.first().is_some_and(|&s| s > 0.0)
            && params.last().is_some_and(|&s| s < 1.0)
            && params.windows(2).all(|w| w[0] < w[1]);
        if !monotone {
            let mut acc = 0.0;
            let mut prev = a;
            let mut cum = Vec::with_capacity(chain.len());
            for &i in &chain {
                acc += crate::mesh::dist(&prev, &pts[i]);
                cum.push(acc);
                prev = pts[i];
            }
            let total = acc + crate::mesh::dist(&prev, &bp);
            params = cum.iter().map(|c| c / total).collect();
        }
        for (&i, s) in chain.iter().zip(params) {
            if cross(a, bp, pts[i]) == 0.0 && monotone {
                continue;
            }
            let v = lp[i];
            coords[2 * v] = a[0] + s * e[0];
            coords[2 * v + 1] = a[1] + s * e[1];
        }
    }
    let out = mesh.with_coords(coords)?;
    if !is_convex(&out, 1e-12)? {
        return Err(Error::InvalidMesh("convex hull repair left a reflex vertex".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::constraint_values;
    use super::super::tests::reflex_quad;
    use super::*;
    use crate::mesh::{generate_primitive, polygon_mesh, Primitive};

    #[test]
    fn convex_mesh_unchanged() {
        let disk = generate_primitive(Primitive::UnitDisk, 2).unwrap();
        let out = convexify(&disk).unwrap();
        assert_eq!(out.coords(), disk.coords());
    }

    #[test]
    fn reflex_quad_projected_onto_hull_edge() {
        let out = convexify(&reflex_quad()).unwrap();
        let p = out.point(2);
        // closest point of (0.5, 0.5) on the segment from (2,0) to (0,2)
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let cs = constraint_values(&out).unwrap();
        let at = cs.index_map.iter().position(|ix| ix[1] == 2).unwrap();
        assert!(cs.values[at].abs() < 1e-14);
        assert_eq!(&out.coords()[..4], &reflex_quad().coords()[..4]);
    }

    #[test]
    fn star_becomes_convex() {
        let poly: Vec<[f64; 2]> = (0..10)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 5.0;
                let r = if k % 2 == 0 { 1.0 } else { 0.6 };
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let mesh = polygon_mesh(&poly).unwrap();
        let out = convexify(&mesh).unwrap();
        assert!(is_convex(&out, 1e-12).unwrap());
        assert_eq!(out.point(0), mesh.point(0));
    }

    #[test]
    fn rejects_three_dimensions() {
        let cube = generate_primitive(Primitive::UnitCubeCentered, 0).unwrap();
        let mut x = cube.coords().to_vec();
        let corner = (0..8).find(|&v| cube.point(v) == [0.5, 0.5, 0.5]).unwrap();
        for k in 0..3 {
            x[3 * corner + k] -= 0.1;
        }
        let dented = cube.with_coords(x).unwrap();
        assert!(matches!(convexify(&dented), Err(Error::Unsupported(_))));
    }

    #[test]
    fn hull_drops_collinear_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, 0.5], [0.0, 2.0]];
        let mut h = monotone_chain(&pts);
        h.sort_unstable();
        assert_eq!(h, vec![0, 2, 3, 5]);
    }

    #[test]
    fn crossing_segments() {
        assert!(self_intersecting(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]));
        assert!(!self_intersecting(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]));
    }
}
