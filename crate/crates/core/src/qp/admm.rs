use nalgebra::{DMatrix, DVector};

use super::{kkt_residuals, KktResiduals, QpSolution, QpStatus, QuadraticProgram};
use crate::error::{Error, Result};

const MIN_SCALING: f64 = 1e-4;
const MAX_SCALING: f64 = 1e4;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const EQ_RHO_FACTOR: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct QpSettings {
    /// Absolute tolerance on all KKT residuals.
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation parameter in (0, 2).
    pub alpha: f64,
    pub scaling_iters: usize,
    pub adaptive_rho: bool,
    pub check_interval: usize,
    pub polish: bool,
    pub eps_infeasible: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            scaling_iters: 15,
            adaptive_rho: true,
            check_interval: 25,
            polish: true,
            eps_infeasible: 1e-5,
        }
    }
}

impl QpSettings {
    pub fn with_tolerance(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.rho > 0.0
            && self.sigma > 0.0
            && self.alpha > 0.0
            && self.alpha < 2.0
            && self.check_interval > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid QP settings {self:?}")))
        }
    }
}

/// Primal/dual starting point, e.g. the solution of a nearby problem.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub primal: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    pub eq_multipliers: Vec<f64>,
}

impl From<&QpSolution> for WarmStart {
    fn from(s: &QpSolution) -> Self {
        Self {
            primal: s.primal.clone(),
            ineq_multipliers: s.ineq_multipliers.clone(),
            eq_multipliers: s.eq_multipliers.clone(),
        }
    }
}

pub fn solve_qp(qp: &QuadraticProgram, tol: f64, max_iter: usize) -> Result<QpSolution> {
    solve_qp_warm(qp, &QpSettings::with_tolerance(tol, max_iter), None)
}

pub fn solve_qp_warm(
    qp: &QuadraticProgram,
    settings: &QpSettings,
    warm: Option<&WarmStart>,
) -> Result<QpSolution> {
    settings.validate()?;
    let mut solver = Admm::new(qp, settings);
    if let Some(w) = warm {
        solver.warm_start(w)?;
    }
    Ok(solver.run())
}

/// Ruiz-scaled copy of the problem: `P̄ = c D P D`, `q̄ = c D q`, `Ā = E A D`.
struct Scaled {
    p: DMatrix<f64>,
    q: DVector<f64>,
    a: DMatrix<f64>,
    at: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
    d: DVector<f64>,
    e: DVector<f64>,
    c: f64,
}

fn clip_scaling(norm: f64) -> f64 {
    if norm < MIN_SCALING {
        1.0
    } else {
        1.0 / norm.min(MAX_SCALING).sqrt()
    }
}

impl Scaled {
    fn new(qp: &QuadraticProgram, iters: usize) -> Self {
        let n = qp.num_vars();
        let mi = qp.num_ineq();
        let m = mi + qp.num_eq();
        let mut p = qp.hessian.to_dense();
        p = (&p + p.transpose()) * 0.5;
        let mut q = DVector::from_column_slice(&qp.linear);
        let mut a = DMatrix::zeros(m, n);
        for (i, j, v) in qp.ineq.iter() {
            a[(i, j)] += v;
        }
        for (i, j, v) in qp.eq.iter() {
            a[(mi + i, j)] += v;
        }
        let mut l = DVector::from_element(m, f64::NEG_INFINITY);
        let mut u = DVector::zeros(m);
        for i in 0..mi {
            u[i] = qp.ineq_rhs[i];
        }
        for i in 0..qp.num_eq() {
            l[mi + i] = qp.eq_rhs[i];
            u[mi + i] = qp.eq_rhs[i];
        }

        let mut d = DVector::from_element(n, 1.0);
        let mut e = DVector::from_element(m, 1.0);
        for _ in 0..iters {
            let mut dd = DVector::from_element(n, 1.0);
            let mut de = DVector::from_element(m, 1.0);
            for j in 0..n {
                let np = p.column(j).amax();
                let na = if m > 0 { a.column(j).amax() } else { 0.0 };
                dd[j] = clip_scaling(np.max(na));
            }
            for i in 0..m {
                de[i] = clip_scaling(a.row(i).amax());
            }
            for j in 0..n {
                for i in 0..n {
                    p[(i, j)] *= dd[i] * dd[j];
                }
                for i in 0..m {
                    a[(i, j)] *= de[i] * dd[j];
                }
                q[j] *= dd[j];
            }
            d.component_mul_assign(&dd);
            e.component_mul_assign(&de);
        }
        let mean_col = if n > 0 {
            (0..n).map(|j| p.column(j).amax()).sum::<f64>() / n as f64
        } else {
            0.0
        };
        let c = clip_scaling(mean_col.max(q.amax())).powi(2);
        p *= c;
        q *= c;
        for i in 0..m {
            l[i] *= e[i];
            u[i] *= e[i];
        }
        let at = a.transpose();
        Self {
            p,
            q,
            a,
            at,
            l,
            u,
            d,
            e,
            c,
        }
    }
}

struct Admm<'a> {
    qp: &'a QuadraticProgram,
    s: &'a QpSettings,
    sc: Scaled,
    x: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
    rho: f64,
    rho_vec: DVector<f64>,
    factor: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

struct Candidate {
    z: Vec<f64>,
    lambda: Vec<f64>,
    nu: Vec<f64>,
    kkt: KktResiduals,
}

impl<'a> Admm<'a> {
    fn new(qp: &'a QuadraticProgram, s: &'a QpSettings) -> Self {
        let sc = Scaled::new(qp, s.scaling_iters);
        let n = qp.num_vars();
        let m = sc.l.len();
        let mut this = Self {
            qp,
            s,
            sc,
            x: DVector::zeros(n),
            z: DVector::zeros(m),
            y: DVector::zeros(m),
            rho: s.rho,
            rho_vec: DVector::zeros(m),
            factor: None,
        };
        this.set_rho(s.rho);
        this
    }

    fn set_rho(&mut self, rho: f64) {
        self.rho = rho.clamp(RHO_MIN, RHO_MAX);
        let mi = self.qp.num_ineq();
        for i in 0..self.rho_vec.len() {
            self.rho_vec[i] = if i < mi {
                self.rho
            } else {
                self.rho * EQ_RHO_FACTOR
            };
        }
        let n = self.x.len();
        let mut k = self.sc.p.clone();
        for i in 0..n {
            k[(i, i)] += self.s.sigma;
        }
        let mut ra = self.sc.a.clone();
        for i in 0..ra.nrows() {
            let r = self.rho_vec[i];
            ra.row_mut(i).scale_mut(r);
        }
        k += &self.sc.at * ra;
        self.factor = k.cholesky();
    }

    fn warm_start(&mut self, w: &WarmStart) -> Result<()> {
        let n = self.qp.num_vars();
        let mi = self.qp.num_ineq();
        let me = self.qp.num_eq();
        for (what, exp, got) in [
            ("warm-start primal", n, w.primal.len()),
            ("warm-start inequality multipliers", mi, w.ineq_multipliers.len()),
            ("warm-start equality multipliers", me, w.eq_multipliers.len()),
        ] {
            if exp != got {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: exp,
                    found: got,
                });
            }
        }
        for j in 0..n {
            self.x[j] = w.primal[j] / self.sc.d[j];
        }
        self.z = &self.sc.a * &self.x;
        for i in 0..mi + me {
            let yi = if i < mi {
                w.ineq_multipliers[i]
            } else {
                w.eq_multipliers[i - mi]
            };
            self.y[i] = self.sc.c * yi / self.sc.e[i];
            self.z[i] = self.z[i].clamp(self.sc.l[i], self.sc.u[i]);
        }
        Ok(())
    }

    fn unscale(&self, x: &DVector<f64>, y: &DVector<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mi = self.qp.num_ineq();
        let z: Vec<f64> = x.iter().zip(self.sc.d.iter()).map(|(a, b)| a * b).collect();
        let yy: Vec<f64> = y
            .iter()
            .zip(self.sc.e.iter())
            .map(|(a, b)| a * b / self.sc.c)
            .collect();
        (z, yy[..mi].to_vec(), yy[mi..].to_vec())
    }

    fn candidate(&self, x: &DVector<f64>, y: &DVector<f64>) -> Candidate {
        let (z, mut lambda, nu) = self.unscale(x, y);
        // Round-off level negative multipliers are clipped so that λ ≥ 0 holds exactly.
        for l in lambda.iter_mut() {
            if *l < 0.0 && *l > -self.s.tol {
                *l = 0.0;
            }
        }
        let kkt = kkt_residuals(self.qp, &z, &lambda, &nu);
        Candidate { z, lambda, nu, kkt }
    }

    fn finish(&self, c: Candidate, status: QpStatus, iterations: usize, polished: bool) -> QpSolution {
        QpSolution {
            primal: c.z,
            ineq_multipliers: c.lambda,
            eq_multipliers: c.nu,
            status,
            kkt: c.kkt,
            iterations,
            polished,
        }
    }

    fn run(&mut self) -> QpSolution {
        let n = self.x.len();
        let m = self.z.len();
        let mi = self.qp.num_ineq();
        let alpha = self.s.alpha;
        let sigma = self.s.sigma;
        let tol = self.s.tol;

        if self.s.polish {
            if let Some(c) = self.polish() {
                return self.finish(c, QpStatus::Solved, 0, true);
            }
        }
        if self.factor.is_none() {
            // P + σI + AᵀRA is positive definite for convex data; failure means NaN/∞ crept in.
            let c = self.candidate(&self.x, &self.y);
            return self.finish(c, QpStatus::MaxIter, 0, false);
        }

        let mut rhs = DVector::zeros(n);
        let mut last_polish_iter = 0usize;
        for iter in 1..=self.s.max_iter {
            // x̃ from the reduced KKT system
            rhs.copy_from(&self.x);
            rhs *= sigma;
            rhs -= &self.sc.q;
            let w = self.rho_vec.component_mul(&self.z) - &self.y;
            rhs += &self.sc.at * w;
            let xt = self.factor.as_ref().unwrap().solve(&rhs);
            let zt = &self.sc.a * &xt;

            let x_new = &xt * alpha + &self.x * (1.0 - alpha);
            let z_relax = &zt * alpha + &self.z * (1.0 - alpha);
            let mut z_new = DVector::zeros(m);
            for i in 0..m {
                z_new[i] = (z_relax[i] + self.y[i] / self.rho_vec[i]).clamp(self.sc.l[i], self.sc.u[i]);
            }
            let dy = (&z_relax - &z_new).component_mul(&self.rho_vec);
            let y_new = &self.y + &dy;
            self.x = x_new;
            self.z = z_new;
            self.y = y_new;

            if iter % self.s.check_interval != 0 && iter != self.s.max_iter {
                continue;
            }

            if m > 0 && self.primal_infeasible(&dy) {
                let c = self.candidate(&self.x, &self.y);
                return self.finish(c, QpStatus::Infeasible, iter, false);
            }

            let (prim, dual, prim_scale, dual_scale) = self.residuals();
            let converged = prim <= tol && dual <= tol;
            let near = prim <= 1e-3 * (1.0 + prim_scale) && dual <= 1e-3 * (1.0 + dual_scale);
            if self.s.polish && (converged || (near && iter - last_polish_iter >= 10 * self.s.check_interval)) {
                last_polish_iter = iter;
                if let Some(c) = self.polish() {
                    return self.finish(c, QpStatus::Solved, iter, true);
                }
            }
            if converged {
                let c = self.candidate(&self.x, &self.y);
                if c.kkt.max() <= tol {
                    return self.finish(c, QpStatus::Solved, iter, false);
                }
            }

            if self.s.adaptive_rho && m > 0 && mi + (m - mi) > 0 {
                let ps = prim / (1e-30 + prim_scale);
                let ds = dual / (1e-30 + dual_scale);
                let new_rho = (self.rho * (ps / (ds + 1e-30)).sqrt()).clamp(RHO_MIN, RHO_MAX);
                if new_rho > 5.0 * self.rho || new_rho < 0.2 * self.rho {
                    self.set_rho(new_rho);
                    if self.factor.is_none() {
                        break;
                    }
                }
            }
        }
        let c = self.candidate(&self.x, &self.y);
        let status = if c.kkt.max() <= tol {
            QpStatus::Solved
        } else {
            QpStatus::MaxIter
        };
        self.finish(c, status, self.s.max_iter, false)
    }

    /// Unscaled primal and dual residuals together with their normalizers.
    fn residuals(&self) -> (f64, f64, f64, f64) {
        let ax = &self.sc.a * &self.x;
        let einv = self.sc.e.map(|v| 1.0 / v);
        let dinv = self.sc.d.map(|v| 1.0 / v);
        let prim = (&ax - &self.z).component_mul(&einv).amax();
        let prim_scale = ax.component_mul(&einv).amax().max(self.z.component_mul(&einv).amax());
        let px = &self.sc.p * &self.x;
        let aty = &self.sc.at * &self.y;
        let cinv = 1.0 / self.sc.c;
        let dual = (&px + &self.sc.q + &aty).component_mul(&dinv).amax() * cinv;
        let dual_scale = px
            .component_mul(&dinv)
            .amax()
            .max(aty.component_mul(&dinv).amax())
            .max(self.sc.q.component_mul(&dinv).amax())
            * cinv;
        (
            if prim.is_nan() { f64::INFINITY } else { prim },
            if dual.is_nan() { f64::INFINITY } else { dual },
            prim_scale,
            dual_scale,
        )
    }

    fn primal_infeasible(&self, dy: &DVector<f64>) -> bool {
        let edy = dy.component_mul(&self.sc.e);
        let norm = edy.amax();
        if norm < 1e-14 {
            return false;
        }
        let eps = self.s.eps_infeasible * norm;
        let atdy = (&self.sc.at * dy).component_mul(&self.sc.d.map(|v| 1.0 / v));
        if atdy.amax() > eps {
            return false;
        }
        let mut support = 0.0;
        for i in 0..dy.len() {
            if dy[i] > 0.0 {
                if self.sc.u[i].is_infinite() {
                    return false;
                }
                support += self.sc.u[i] * dy[i];
            } else if dy[i] < 0.0 {
                if self.sc.l[i].is_infinite() {
                    return false;
                }
                support += self.sc.l[i] * dy[i];
            }
        }
        support < -eps
    }

    /// Solve the equality-constrained QP on a guessed active set, correcting the guess a few times.
    fn polish(&self) -> Option<Candidate> {
        let m = self.z.len();
        let mi = self.qp.num_ineq();
        let mut active: Vec<bool> = (0..m)
            .map(|i| i >= mi || self.sc.u[i] - self.z[i] < self.y[i])
            .collect();
        for _ in 0..3 * (mi + 2).min(20) {
            let (x, y) = self.solve_reduced_kkt(&active)?;
            let cand = self.candidate(&x, &y);
            if cand.kkt.max() <= self.s.tol {
                return Some(cand);
            }
            // Update the working set: drop rows with negative multipliers, add violated rows.
            let ax = &self.sc.a * &x;
            let mut changed = false;
            for i in 0..mi {
                let lam = cand.lambda[i];
                if active[i] && lam < -self.s.tol {
                    active[i] = false;
                    changed = true;
                } else if !active[i] && (ax[i] - self.sc.u[i]) / self.sc.e[i] > self.s.tol {
                    active[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return None;
            }
        }
        None
    }

    fn solve_reduced_kkt(&self, active: &[bool]) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.x.len();
        let rows: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
        let k = rows.len();
        let delta = 1e-9;
        let mut kk = DMatrix::zeros(n + k, n + k);
        kk.view_mut((0, 0), (n, n)).copy_from(&self.sc.p);
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..n {
                let v = self.sc.a[(i, j)];
                kk[(n + r, j)] = v;
                kk[(j, n + r)] = v;
            }
        }
        let mut kreg = kk.clone();
        for i in 0..n {
            kreg[(i, i)] += delta;
        }
        for i in n..n + k {
            kreg[(i, i)] -= delta;
        }
        let lu = kreg.lu();
        let mut rhs = DVector::zeros(n + k);
        for j in 0..n {
            rhs[j] = -self.sc.q[j];
        }
        for (r, &i) in rows.iter().enumerate() {
            rhs[n + r] = self.sc.u[i];
        }
        let mut sol = lu.solve(&rhs)?;
        for _ in 0..10 {
            let res = &rhs - &kk * &sol;
            if res.amax() <= 1e-15 * (1.0 + rhs.amax()) {
                break;
            }
            let corr = lu.solve(&res)?;
            sol += corr;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let x = sol.rows(0, n).into_owned();
        let mut y = DVector::zeros(active.len());
        for (r, &i) in rows.iter().enumerate() {
            y[i] = sol[n + r];
        }
        Some((x, y))
    }
}
