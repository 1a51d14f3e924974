/// Scalar function of position, optionally with an analytic gradient.
pub trait SpatialFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Analytic gradient, when known.
    fn gradient(&self, _x: &[f64]) -> Option<[f64; 3]> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl SpatialFunction for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }

    fn gradient(&self, _x: &[f64]) -> Option<[f64; 3]> {
        Some([0.0; 3])
    }
}

/// Closure without a gradient; derivative terms fall back to finite
/// differences.
#[derive(Clone, Copy)]
pub struct Func<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> SpatialFunction for Func<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

#[derive(Clone, Copy)]
pub struct FuncWithGradient<F, G> {
    pub f: F,
    pub grad: G,
}

impl<F, G> SpatialFunction for FuncWithGradient<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> [f64; 3] + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<[f64; 3]> {
        Some((self.grad)(x))
    }
}

impl<T: SpatialFunction + ?Sized> SpatialFunction for std::sync::Arc<T> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<[f64; 3]> {
        (**self).gradient(x)
    }
}

/// Analytic gradient if available, else central differences with step `h`.
pub(crate) fn gradient_or_fd(f: &dyn SpatialFunction, x: &[f64], h: f64) -> [f64; 3] {
    if let Some(g) = f.gradient(x) {
        return g;
    }
    let mut g = [0.0; 3];
    let mut xp = [0.0; 3];
    xp[..x.len()].copy_from_slice(x);
    for k in 0..x.len() {
        let orig = xp[k];
        xp[k] = orig + h;
        let fp = f.value(&xp[..x.len()]);
        xp[k] = orig - h;
        let fm = f.value(&xp[..x.len()]);
        xp[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}
