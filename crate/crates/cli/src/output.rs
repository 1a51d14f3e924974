//! Artifact writers. Every file is written to a temporary sibling and then
//! renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use convexshape::fem::ScalarFieldP1;
use convexshape::mesh::{extract_boundary, SimplicialMesh};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ExportError> {
    let io = |source| ExportError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// ASCII legacy VTK unstructured grid with point scalars.
pub fn vtk_legacy(mesh: &SimplicialMesh, fields: &[(&str, &ScalarFieldP1)], title: &str) -> Result<String, ExportError> {
    let nv = mesh.num_vertices();
    for (name, f) in fields {
        if f.len() != nv {
            return Err(ExportError::Format(format!(
                "field `{name}` has {} values for {nv} vertices",
                f.len()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(ExportError::Format(format!("invalid field name `{name}`")));
        }
    }
    let d = mesh.dim();
    let nc = mesh.num_cells();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in 0..nv {
        let p = mesh.point(v);
        let z = if d == 3 { p[2] } else { 0.0 };
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], z);
    }
    let _ = writeln!(s, "CELLS {nc} {}", nc * (d + 2));
    for cell in mesh.cells() {
        s.push_str(&(d + 1).to_string());
        for v in cell {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    let ty = if d == 2 { "5\n" } else { "10\n" };
    for _ in 0..nc {
        s.push_str(ty);
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, f) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in f.values() {
                let _ = writeln!(s, "{v:?}");
            }
        }
    }
    Ok(s)
}

const LOW: [f64; 3] = [59.0, 76.0, 192.0];
const HIGH: [f64; 3] = [180.0, 4.0, 38.0];

fn ramp(s: f64) -> String {
    let s = if s.is_finite() { s.clamp(0.0, 1.0) } else { 0.5 };
    let c: Vec<u8> = (0..3).map(|i| (LOW[i] + s * (HIGH[i] - LOW[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Filled triangles colored by the cell mean of `field`, plus the boundary
/// outline. The viewport is the mesh bounding box with a 5% margin.
pub fn svg2d(mesh: &SimplicialMesh, field: Option<&ScalarFieldP1>) -> Result<String, ExportError> {
    if mesh.dim() != 2 {
        return Err(ExportError::Format("SVG export needs a 2D mesh".into()));
    }
    if let Some(f) = field {
        if f.len() != mesh.num_vertices() {
            return Err(ExportError::Format("field size does not match the mesh".into()));
        }
    }
    let boundary = extract_boundary(mesh).map_err(|e| ExportError::Format(e.to_string()))?;
    let (lo, hi) = mesh.bounding_box();
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let pad = 0.05 * span;
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    // SVG y points down
    let px = |v: usize| {
        let p = mesh.point(v);
        (p[0] - x0, y0 + h - p[1])
    };
    let (fmin, fmax) = field.map_or((0.0, 1.0), |f| {
        f.values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    });
    let stroke = 0.002 * span;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.6} {h:.6}\" width=\"800\" height=\"{:.0}\">",
        800.0 * h / w
    );
    let _ = writeln!(s, "<g stroke=\"#ffffff\" stroke-width=\"{:.6}\">", stroke * 0.5);
    for cell in mesh.cells() {
        let color = match field {
            Some(f) => {
                let mean = cell.iter().map(|&v| f.values()[v]).sum::<f64>() / 3.0;
                ramp((mean - fmin) / (fmax - fmin))
            }
            None => "#c8c8c8".to_string(),
        };
        let pts: Vec<String> = cell
            .iter()
            .map(|&v| {
                let (a, b) = px(v);
                format!("{a:.6},{b:.6}")
            })
            .collect();
        let _ = writeln!(s, "<polygon points=\"{}\" fill=\"{color}\"/>", pts.join(" "));
    }
    s.push_str("</g>\n");
    if let Some(lp) = boundary.loop_vertices() {
        let pts: Vec<String> = lp
            .iter()
            .map(|&v| {
                let (a, b) = px(v);
                format!("{a:.6},{b:.6}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polygon points=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"{stroke:.6}\"/>",
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use convexshape::mesh::{generate_primitive, Primitive};

    fn square() -> SimplicialMesh {
        SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], vec![0, 1, 2, 0, 2, 3]).unwrap()
    }

    #[test]
    fn two_triangle_vtk() {
        let m = square();
        let u = ScalarFieldP1::zeros(&m);
        let s = vtk_legacy(&m, &[("u", &u)], "square").unwrap();
        assert!(s.contains("POINTS 4 double\n"));
        assert!(s.contains("CELLS 2 8\n3 0 1 2\n3 0 2 3\n"));
        assert!(s.contains("CELL_TYPES 2\n5\n5\n"));
        assert!(s.contains("POINT_DATA 4\nSCALARS u double 1\nLOOKUP_TABLE default\n0.0\n0.0\n0.0\n0.0\n"));
        assert_eq!(s.matches("SCALARS").count(), 1);
    }

    #[test]
    fn cube_uses_tetra_type() {
        let m = generate_primitive(Primitive::UnitCubeCentered, 1).unwrap();
        let s = vtk_legacy(&m, &[], "cube").unwrap();
        let types = s.split("CELL_TYPES").nth(1).unwrap();
        assert_eq!(types.lines().filter(|l| l.trim() == "10").count(), m.num_cells());
        assert!(!s.contains("POINT_DATA"));
    }

    #[test]
    fn vtk_coordinates_round_trip() {
        let m = generate_primitive(Primitive::UnitDisk, 1).unwrap();
        let s = vtk_legacy(&m, &[], "disk").unwrap();
        let body = s.split("POINTS").nth(1).unwrap();
        let coords: Vec<f64> = body
            .lines()
            .skip(1)
            .take(m.num_vertices())
            .flat_map(|l| l.split(' ').take(2).map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        assert_eq!(coords, m.coords());
    }

    #[test]
    fn rejects_mismatched_field() {
        let m = square();
        let other = generate_primitive(Primitive::UnitDisk, 0).unwrap();
        let u = ScalarFieldP1::zeros(&other);
        assert!(vtk_legacy(&m, &[("u", &u)], "x").is_err());
        assert!(svg2d(&m, Some(&u)).is_err());
        let cube = generate_primitive(Primitive::UnitCubeCentered, 0).unwrap();
        assert!(svg2d(&cube, None).is_err());
    }

    #[test]
    fn svg_has_every_cell_and_outline() {
        let m = generate_primitive(Primitive::UnitDisk, 1).unwrap();
        let u = ScalarFieldP1::from_fn(&m, |x| x[0]);
        let s = svg2d(&m, Some(&u)).unwrap();
        assert_eq!(s.matches("<polygon").count(), m.num_cells() + 1);
        assert_eq!(ramp(0.0), "#3b4cc0");
        assert_eq!(ramp(1.0), "#b40426");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
