/// Objective integrand `j(x, u, g)` with its partial derivatives with
/// respect to position, state value and state gradient.
pub trait Integrand: Send + Sync {
    fn value(&self, x: &[f64], u: f64, g: &[f64]) -> f64;
    fn d_x(&self, x: &[f64], u: f64, g: &[f64]) -> [f64; 3];
    fn d_u(&self, x: &[f64], u: f64, g: &[f64]) -> f64;
    fn d_g(&self, x: &[f64], u: f64, g: &[f64]) -> [f64; 3];
}

impl<T: Integrand + ?Sized> Integrand for std::sync::Arc<T> {
    fn value(&self, x: &[f64], u: f64, g: &[f64]) -> f64 {
        (**self).value(x, u, g)
    }
    fn d_x(&self, x: &[f64], u: f64, g: &[f64]) -> [f64; 3] {
        (**self).d_x(x, u, g)
    }
    fn d_u(&self, x: &[f64], u: f64, g: &[f64]) -> f64 {
        (**self).d_u(x, u, g)
    }
    fn d_g(&self, x: &[f64], u: f64, g: &[f64]) -> [f64; 3] {
        (**self).d_g(x, u, g)
    }
}

/// Closed-form integrands used by the examples and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardIntegrand {
    Zero,
    /// `j = 1`, the volume functional.
    One,
    /// `j = u`
    U,
    /// `j = u²`
    USquared,
    /// `j = |∇u|²`
    GradSquared,
    /// `j = x₁ u`
    X1U,
}

impl Integrand for StandardIntegrand {
    fn value(&self, x: &[f64], u: f64, g: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::One => 1.0,
            Self::U => u,
            Self::USquared => u * u,
            Self::GradSquared => g.iter().map(|v| v * v).sum(),
            Self::X1U => x[0] * u,
        }
    }

    fn d_x(&self, _x: &[f64], u: f64, _g: &[f64]) -> [f64; 3] {
        match self {
            Self::X1U => [u, 0.0, 0.0],
            _ => [0.0; 3],
        }
    }

    fn d_u(&self, x: &[f64], u: f64, _g: &[f64]) -> f64 {
        match self {
            Self::U => 1.0,
            Self::USquared => 2.0 * u,
            Self::X1U => x[0],
            _ => 0.0,
        }
    }

    fn d_g(&self, _x: &[f64], _u: f64, g: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        if let Self::GradSquared = self {
            for (o, v) in out.iter_mut().zip(g) {
                *o = 2.0 * v;
            }
        }
        out
    }
}

/// Largest relative mismatch between the analytic partials and central
/// differences with step `h` at the given sample point.
pub fn partials_fd_defect(j: &dyn Integrand, x: &[f64], u: f64, g: &[f64], h: f64) -> f64 {
    let d = x.len();
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
    let mut worst: f64 = 0.0;
    let dx = j.d_x(x, u, g);
    let dg = j.d_g(x, u, g);
    for k in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let fd = (j.value(&xp, u, g) - j.value(&xm, u, g)) / (2.0 * h);
        worst = worst.max(rel(dx[k], fd));
        let mut gp = g.to_vec();
        let mut gm = g.to_vec();
        gp[k] += h;
        gm[k] -= h;
        let fd = (j.value(x, u, &gp) - j.value(x, u, &gm)) / (2.0 * h);
        worst = worst.max(rel(dg[k], fd));
    }
    let fd = (j.value(x, u + h, g) - j.value(x, u - h, g)) / (2.0 * h);
    worst.max(rel(j.d_u(x, u, g), fd))
}
