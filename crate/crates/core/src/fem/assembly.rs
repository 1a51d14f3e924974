use super::SpatialFunction;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{geometry_quadrature, SimplicialMesh};

fn check_cell(mesh: &SimplicialMesh, c: usize, volume: f64) -> Result<()> {
    if volume > 0.0 && volume.is_finite() {
        Ok(())
    } else {
        let _ = mesh;
        Err(Error::DegenerateCell { cell: c })
    }
}

/// `A_ij = Σ_T ∫_T ∇φ_i·∇φ_j`, no boundary conditions applied.
pub fn assemble_stiffness(mesh: &SimplicialMesh) -> Result<CsrMatrix> {
    let n = mesh.num_vertices();
    let k = mesh.dim() + 1;
    let mut b = TripletBuilder::with_capacity(n, n, mesh.num_cells() * k * k);
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        check_cell(mesh, c, g.volume)?;
        let cell = mesh.cell(c);
        for a in 0..k {
            for bb in 0..k {
                let s: f64 = (0..g.dim).map(|i| g.grads[a][i] * g.grads[bb][i]).sum();
                b.push(cell[a], cell[bb], g.volume * s);
            }
        }
    }
    Ok(b.build())
}

/// Exact P1 mass matrix, `|T| (1 + δ_ab) / ((d+1)(d+2))` per cell.
pub fn assemble_mass(mesh: &SimplicialMesh) -> Result<CsrMatrix> {
    let n = mesh.num_vertices();
    let d = mesh.dim();
    let k = d + 1;
    let denom = ((d + 1) * (d + 2)) as f64;
    let mut b = TripletBuilder::with_capacity(n, n, mesh.num_cells() * k * k);
    for c in 0..mesh.num_cells() {
        let vol = mesh.cell_volume(c);
        check_cell(mesh, c, vol)?;
        let cell = mesh.cell(c);
        for a in 0..k {
            for bb in 0..k {
                let f = if a == bb { 2.0 } else { 1.0 };
                b.push(cell[a], cell[bb], vol * f / denom);
            }
        }
    }
    Ok(b.build())
}

/// `b_i = Σ_T Q_T(f φ_i)` with the degree-two interior rule.
pub fn assemble_load(mesh: &SimplicialMesh, f: &dyn SpatialFunction) -> Result<Vec<f64>> {
    let mut out = vec![0.0; mesh.num_vertices()];
    let quad = geometry_quadrature(mesh.dim());
    for c in 0..mesh.num_cells() {
        let g = mesh.geometry(c);
        check_cell(mesh, c, g.volume)?;
        let cell = mesh.cell(c);
        for (bary, w) in quad {
            let x = g.map(bary);
            let fx = f.value(&x[..g.dim]);
            if !fx.is_finite() {
                return Err(Error::NonFinite {
                    cell: c,
                    what: "right-hand side",
                });
            }
            for (a, &v) in cell.iter().enumerate() {
                out[v] += g.volume * w * fx * bary[a];
            }
        }
    }
    Ok(out)
}
