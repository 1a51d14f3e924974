use super::SimplicialMesh;

/// Per-cell affine geometry: vertex positions, volume and the (constant)
/// gradients of the barycentric hat functions.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub dim: usize,
    pub volume: f64,
    pub points: [[f64; 3]; 4],
    pub grads: [[f64; 3]; 4],
}

impl CellGeometry {
    pub(crate) fn new(mesh: &SimplicialMesh, c: usize) -> Self {
        let d = mesh.dim();
        let cell = mesh.cell(c);
        let mut points = [[0.0; 3]; 4];
        for (k, &v) in cell.iter().enumerate() {
            points[k][..d].copy_from_slice(mesh.point(v));
        }
        // columns of the affine map: e_k = x_k - x_0
        let mut jac = [[0.0; 3]; 3];
        for k in 0..d {
            for i in 0..d {
                jac[i][k] = points[k + 1][i] - points[0][i];
            }
        }
        let (det, inv) = invert(&jac, d);
        let mut grads = [[0.0; 3]; 4];
        for k in 0..d {
            // row k of J⁻¹ is ∇λ_{k+1}
            grads[k + 1][..d].copy_from_slice(&inv[k][..d]);
            for i in 0..d {
                grads[0][i] -= inv[k][i];
            }
        }
        let fact = if d == 2 { 2.0 } else { 6.0 };
        Self {
            dim: d,
            volume: det / fact,
            points,
            grads,
        }
    }

    pub fn nodes(&self) -> usize {
        self.dim + 1
    }

    /// Physical position of a point given by barycentric coordinates.
    pub fn map(&self, bary: &[f64; 4]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.nodes() {
            for i in 0..self.dim {
                x[i] += bary[a] * self.points[a][i];
            }
        }
        x
    }

    /// Gradient of the P1 interpolant with nodal values `vals`.
    pub fn gradient(&self, vals: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for a in 0..self.nodes() {
            for i in 0..self.dim {
                g[i] += vals[a] * self.grads[a][i];
            }
        }
        g
    }

    /// Jacobian `DV[m][n] = ∂V_m/∂x_n` of a P1 vector field with nodal values
    /// `vals[a]`.
    pub fn field_jacobian(&self, vals: &[[f64; 3]; 4]) -> [[f64; 3]; 3] {
        let mut j = [[0.0; 3]; 3];
        for a in 0..self.nodes() {
            for m in 0..self.dim {
                for n in 0..self.dim {
                    j[m][n] += vals[a][m] * self.grads[a][n];
                }
            }
        }
        j
    }
}

/// Symmetric interior quadrature of degree two: barycentric points and
/// weights summing to one (3 points on triangles, 4 on tetrahedra).
pub(crate) fn quadrature(dim: usize) -> &'static [([f64; 4], f64)] {
    const A2: f64 = 2.0 / 3.0;
    const B2: f64 = 1.0 / 6.0;
    const TRI: [([f64; 4], f64); 3] = [
        ([A2, B2, B2, 0.0], 1.0 / 3.0),
        ([B2, A2, B2, 0.0], 1.0 / 3.0),
        ([B2, B2, A2, 0.0], 1.0 / 3.0),
    ];
    const A3: f64 = 0.585_410_196_624_968_5;
    const B3: f64 = 0.138_196_601_125_010_5;
    const TET: [([f64; 4], f64); 4] = [
        ([A3, B3, B3, B3], 0.25),
        ([B3, A3, B3, B3], 0.25),
        ([B3, B3, A3, B3], 0.25),
        ([B3, B3, B3, A3], 0.25),
    ];
    if dim == 2 {
        &TRI
    } else {
        &TET
    }
}

pub(crate) fn determinant(m: &[[f64; 3]; 3], d: usize) -> f64 {
    if d == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

fn invert(m: &[[f64; 3]; 3], d: usize) -> (f64, [[f64; 3]; 3]) {
    let det = determinant(m, d);
    let mut inv = [[0.0; 3]; 3];
    if d == 2 {
        inv[0][0] = m[1][1] / det;
        inv[0][1] = -m[0][1] / det;
        inv[1][0] = -m[1][0] / det;
        inv[1][1] = m[0][0] / det;
    } else {
        for i in 0..3 {
            for j in 0..3 {
                // cofactor transpose
                let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
            }
        }
    }
    (det, inv)
}

/// Spectral norm of the leading `d × d` block, from the largest eigenvalue
/// of `BᵀB` in closed form.
pub fn spectral_norm(b: &[[f64; 3]; 3], d: usize) -> f64 {
    let mut s = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            s[i][j] = (0..d).map(|k| b[k][i] * b[k][j]).sum();
        }
    }
    let lmax = if d == 2 {
        let (a, bb, c) = (s[0][0], s[0][1], s[1][1]);
        0.5 * (a + c + ((a - c) * (a - c) + 4.0 * bb * bb).sqrt())
    } else {
        sym3_max_eigenvalue(&s)
    };
    lmax.max(0.0).sqrt()
}

fn sym3_max_eigenvalue(a: &[[f64; 3]; 3]) -> f64 {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 <= 1e-300 {
        return a[0][0].max(a[1][1]).max(a[2][2]);
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut bm = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            bm[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (determinant(&bm, 3) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}
