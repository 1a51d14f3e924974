use super::QuadraticProgram;
use crate::linalg::norm_inf;

/// Infinity-norm KKT residuals of a primal/dual pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    /// `‖Hz + g + Aᵀλ + Cᵀν‖∞`
    pub stationarity: f64,
    /// `max(‖(Az - b)⁺‖∞, ‖Cz - d‖∞)`
    pub primal: f64,
    /// `‖λ⁻‖∞`
    pub dual: f64,
    /// `maxᵢ |λᵢ (Az - b)ᵢ|`
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

pub fn kkt_residuals(qp: &QuadraticProgram, z: &[f64], lambda: &[f64], nu: &[f64]) -> KktResiduals {
    let mut stat = qp.hessian.mul_vec(z);
    stat.iter_mut().zip(&qp.linear).for_each(|(s, g)| *s += g);
    for (s, a) in stat.iter_mut().zip(qp.ineq.transpose_mul_vec(lambda)) {
        *s += a;
    }
    for (s, c) in stat.iter_mut().zip(qp.eq.transpose_mul_vec(nu)) {
        *s += c;
    }
    let az = qp.ineq.mul_vec(z);
    let mut primal: f64 = 0.0;
    let mut compl: f64 = 0.0;
    for ((a, b), l) in az.iter().zip(&qp.ineq_rhs).zip(lambda) {
        primal = primal.max(a - b);
        compl = compl.max((l * (a - b)).abs());
    }
    let cz = qp.eq.mul_vec(z);
    for (c, d) in cz.iter().zip(&qp.eq_rhs) {
        primal = primal.max((c - d).abs());
    }
    let dual = lambda.iter().fold(0.0_f64, |m, &l| m.max(-l));
    KktResiduals {
        stationarity: norm_inf(&stat),
        primal: primal.max(0.0),
        dual,
        complementarity: compl,
    }
}
