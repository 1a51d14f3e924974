use super::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target `‖b - Ax‖ ≤ tol ‖b‖`.
    pub tol: f64,
    pub jacobi: bool,
    /// Defaults to `10 n` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            jacobi: false,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Unpreconditioned conjugate gradients from a zero initial guess.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<CgOutcome> {
    cg_solve_with(
        a,
        b,
        None,
        CgOptions {
            tol,
            ..Default::default()
        },
    )
}

/// Conjugate gradients with optional Jacobi preconditioning and warm start.
pub fn cg_solve_with(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: CgOptions,
) -> Result<CgOutcome> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "cg right-hand side",
            expected: a.nrows(),
            found: n,
        });
    }
    let bnorm = norm2(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| {
        a.diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    });
    let precondition = |r: &[f64], z: &mut Vec<f64>| match &inv_diag {
        Some(d) => {
            z.clear();
            z.extend(r.iter().zip(d).map(|(r, d)| r * d));
        }
        None => {
            z.clear();
            z.extend_from_slice(r);
        }
    };

    let mut r = a.mul_vec(&x);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut z = Vec::with_capacity(n);
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while rel > opts.tol {
        if it >= max_iter {
            return Err(Error::CgNotConverged {
                iterations: it,
                residual: rel,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::CgNotConverged {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        rel = norm2(&r) / bnorm;
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgOutcome {
        x,
        iterations: it,
        relative_residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;
    use nalgebra::{DMatrix, DVector};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let out = cg_solve(&a, &b, 1e-12).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b);
    }

    #[test]
    fn diagonal_system() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, 4.0);
        let out = cg_solve(&t.build(), &[1.0, 4.0], 1e-12).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-12 && (out.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_spd_matches_dense_cholesky() {
        let mut rng = StdRng::seed_from_u64(7);
        let g = DMatrix::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0));
        let dense = g.transpose() * &g + DMatrix::identity(20, 20);
        let b = DVector::from_fn(20, |_, _| rng.gen_range(-1.0..1.0));
        let oracle = dense.clone().cholesky().unwrap().solve(&b);
        for jacobi in [false, true] {
            let out = cg_solve_with(
                &CsrMatrix::from_dense(&dense),
                b.as_slice(),
                None,
                CgOptions {
                    tol: 1e-12,
                    jacobi,
                    max_iter: None,
                },
            )
            .unwrap();
            for i in 0..20 {
                assert!((out.x[i] - oracle[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        let err = cg_solve(&t.build(), &[1.0, 1.0], 1e-12).unwrap_err();
        assert!(matches!(err, Error::CgNotConverged { .. }));
    }
}
