//! Built-in problem definitions. The right-hand sides are generated as
//! expression text so configs, summaries and the solver see the same data.

use std::f64::consts::TAU;
use std::str::FromStr;

use convexshape::fem::{BoundaryCondition, ProblemSpec};
use convexshape::mesh::Primitive;

use crate::expr::{ExprError, ExprFunction, ExprIntegrand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Example1,
    Example2,
    Example3Convex,
    Example3Unconstrained,
    Custom,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::Example3Convex => "example3_convex",
            Self::Example3Unconstrained => "example3_unconstrained",
            Self::Custom => "custom",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "example1" => Self::Example1,
            "example2" => Self::Example2,
            "example3_convex" => Self::Example3Convex,
            "example3_unconstrained" => Self::Example3Unconstrained,
            "custom" => Self::Custom,
            other => return Err(format!("unknown problem `{other}`")),
        })
    }
}

/// Everything a run needs besides the algorithm parameters.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub kind: ProblemKind,
    pub rhs: String,
    pub integrand: String,
    pub bc: BoundaryCondition,
    pub primitive: Primitive,
    pub level: usize,
    pub constrained: bool,
}

impl ProblemSetup {
    pub fn builtin(kind: ProblemKind) -> Option<Self> {
        let (rhs, bc, primitive, level, constrained) = match kind {
            ProblemKind::Example1 => (example1_rhs(), BoundaryCondition::DirichletZero, Primitive::UnitDisk, 0, true),
            ProblemKind::Example2 => (example2_rhs(5), BoundaryCondition::DirichletZero, Primitive::UnitDisk, 0, true),
            ProblemKind::Example3Convex => {
                (example3_rhs(), BoundaryCondition::NeumannReaction, Primitive::UnitCubeCentered, 1, true)
            }
            ProblemKind::Example3Unconstrained => {
                (example3_rhs(), BoundaryCondition::NeumannReaction, Primitive::UnitCubeCentered, 1, false)
            }
            ProblemKind::Custom => return None,
        };
        Some(Self {
            kind,
            rhs,
            integrand: "u".to_string(),
            bc,
            primitive,
            level,
            constrained,
        })
    }

    pub fn dim(&self) -> usize {
        match self.primitive {
            Primitive::UnitCubeCentered => 3,
            _ => 2,
        }
    }

    pub fn spec(&self) -> Result<ProblemSpec, ExprError> {
        let f = ExprFunction::parse(&self.rhs)?;
        let j = ExprIntegrand::parse(&self.integrand)?;
        Ok(ProblemSpec::new(f, j, self.bc, self.dim()))
    }
}

pub fn example1_rhs() -> String {
    "20*(x1 + 0.4 - x2^2)^2 + x1^2 + x2^2 - 1".to_string()
}

/// Repelling points `y_i` on the unit circle and attracting points `z_i` on
/// the circle of radius 6/5, rotated against each other by half a sector.
pub fn example2_points(n: usize) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let step = TAU / n as f64;
    let y = (0..n)
        .map(|i| {
            let a = (i as f64 + 0.5) * step;
            [a.sin(), a.cos()]
        })
        .collect();
    let z = (0..n)
        .map(|i| {
            let a = i as f64 * step;
            [1.2 * a.sin(), 1.2 * a.cos()]
        })
        .collect();
    (y, z)
}

pub fn example2_rhs(n: usize) -> String {
    let (y, z) = example2_points(n);
    let bump = |p: &[f64; 2]| format!("exp(-8*((x1 - {:?})^2 + (x2 - {:?})^2))", p[0], p[1]);
    let mut s = "-0.5 + 0.8*(x1^2 + x2^2)".to_string();
    for p in &y {
        s.push_str(&format!(" + 2*{}", bump(p)));
    }
    for p in &z {
        s.push_str(&format!(" - {}", bump(p)));
    }
    s
}

pub fn example3_rhs() -> String {
    "x1^2 + x2^2 + x3^2 - 1".to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Env};
    use std::f64::consts::PI;

    #[test]
    fn example2_first_points() {
        let (y, z) = example2_points(5);
        assert_eq!(z[0], [0.0, 1.2]);
        assert!((y[0][0] - (PI / 5.0).sin()).abs() < 1e-15);
        assert!((y[0][1] - (PI / 5.0).cos()).abs() < 1e-15);
        for (p, q) in y.iter().zip(&z) {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
            assert!((q[0].hypot(q[1]) - 1.2).abs() < 1e-15);
        }
    }

    #[test]
    fn example2_rhs_matches_closed_form() {
        let e = parse_expression(&example2_rhs(5)).unwrap();
        let (y, z) = example2_points(5);
        for x in [[0.0, 0.0], [0.3, -0.7], [1.1, 0.2]] {
            let mut want = -0.5 + 0.8 * (x[0] * x[0] + x[1] * x[1]);
            for p in &y {
                want += 2.0 * (-8.0 * ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2))).exp();
            }
            for p in &z {
                want -= (-8.0 * ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2))).exp();
            }
            let got = e.eval(&Env::at(&x, 0.0, &[]));
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn example2_rhs_has_five_fold_symmetry() {
        let e = parse_expression(&example2_rhs(5)).unwrap();
        let (s, c) = (TAU / 5.0).sin_cos();
        for x in [[0.2, 0.5], [-0.9, 0.1]] {
            let r = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
            let a = e.eval(&Env::at(&x, 0.0, &[]));
            let b = e.eval(&Env::at(&r, 0.0, &[]));
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn builtins_parse() {
        for kind in [
            ProblemKind::Example1,
            ProblemKind::Example2,
            ProblemKind::Example3Convex,
            ProblemKind::Example3Unconstrained,
        ] {
            let setup = ProblemSetup::builtin(kind).unwrap();
            assert_eq!(setup.spec().unwrap().dim, setup.dim());
            assert_eq!(kind.name().parse::<ProblemKind>().unwrap(), kind);
        }
        assert!(ProblemSetup::builtin(ProblemKind::Custom).is_none());
    }
}
