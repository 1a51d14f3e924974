//! TOML run configuration.
//!
//! ```toml
//! problem = "example1"      # example1 | example2 | example3_convex | example3_unconstrained | custom
//! levels = 3                # optimize-refine cycles
//!
//! [initial]                 # defaults depend on the problem
//! primitive = "unit_disk"   # unit_disk | unit_square | unit_cube_centered
//! level = 0
//!
//! [custom]                  # only with problem = "custom"
//! f = "1"
//! j = "u"
//! bc = "dirichlet"          # dirichlet | neumann
//!
//! [params]                  # all optional
//! t0 = 1.0
//! beta = 0.5
//! sigma = 0.1
//! m = 1e-9
//! beta_m = 10.0
//! eps_tol = 1e-6
//! max_outer = 500
//! max_backtracks = 60
//! constrained = true
//! feasibility_tol = 1e-9    # max Cᵢ of a trial step, relative to diam²; inf disables
//! mu = 1.0
//! lambda = 0.0
//! delta = 10.0
//! qp_tol = 1e-8
//! qp_max_iter = 200000
//! qp_strategy = "reduced"   # reduced | coupled
//!
//! [output]
//! dir = "out"
//! vtk = true
//! svg = true
//! csv = true
//!
//! [hold_all]                # optional; checked and reported, not enforced
//! min = [-2.0, -2.0]
//! max = [2.0, 2.0]
//! ```

use std::path::{Path, PathBuf};

use convexshape::deform::QpStrategy;
use convexshape::fem::BoundaryCondition;
use convexshape::mesh::Primitive;
use convexshape::optimize::AlgorithmParams;
use serde::Deserialize;
use thiserror::Error;

use crate::expr::{ExprError, ExprFunction, ExprIntegrand};
use crate::problems::{ProblemKind, ProblemSetup};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid TOML: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("invalid expression `{text}`: {source}")]
    Expression { text: String, source: ExprError },

    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: String,
    #[serde(default = "one")]
    levels: usize,
    #[serde(default)]
    initial: Option<RawInitial>,
    #[serde(default)]
    custom: Option<RawCustom>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    hold_all: Option<HoldAll>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    primitive: Option<String>,
    level: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCustom {
    f: String,
    #[serde(default = "default_j")]
    j: String,
    #[serde(default = "default_bc")]
    bc: String,
}

fn default_j() -> String {
    "u".to_string()
}

fn default_bc() -> String {
    "dirichlet".to_string()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    t0: Option<f64>,
    beta: Option<f64>,
    sigma: Option<f64>,
    m: Option<f64>,
    beta_m: Option<f64>,
    eps_tol: Option<f64>,
    max_outer: Option<usize>,
    max_backtracks: Option<usize>,
    constrained: Option<bool>,
    feasibility_tol: Option<f64>,
    mu: Option<f64>,
    lambda: Option<f64>,
    delta: Option<f64>,
    qp_tol: Option<f64>,
    qp_max_iter: Option<usize>,
    qp_strategy: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    dir: PathBuf,
    vtk: bool,
    svg: bool,
    csv: bool,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            vtk: true,
            svg: true,
            csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldAll {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl HoldAll {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
    pub svg: bool,
    pub csv: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub setup: ProblemSetup,
    pub levels: usize,
    pub params: AlgorithmParams,
    pub output: OutputConfig,
    pub hold_all: Option<HoldAll>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let kind: ProblemKind = raw.problem.parse().map_err(ConfigError::Invalid)?;
        let mut setup = match (kind, raw.custom) {
            (ProblemKind::Custom, Some(c)) => {
                let bc = match c.bc.as_str() {
                    "dirichlet" => BoundaryCondition::DirichletZero,
                    "neumann" => BoundaryCondition::NeumannReaction,
                    other => return Err(ConfigError::Invalid(format!("unknown boundary condition `{other}`"))),
                };
                ProblemSetup {
                    kind,
                    rhs: c.f,
                    integrand: c.j,
                    bc,
                    primitive: Primitive::UnitDisk,
                    level: 0,
                    constrained: true,
                }
            }
            (ProblemKind::Custom, None) => {
                return Err(ConfigError::Invalid("problem `custom` needs a [custom] table".into()))
            }
            (_, Some(_)) => {
                return Err(ConfigError::Invalid(format!(
                    "[custom] is only allowed with problem `custom`, not `{}`",
                    kind.name()
                )))
            }
            (_, None) => ProblemSetup::builtin(kind).expect("built-in problem"),
        };
        if let Some(init) = raw.initial {
            if let Some(p) = init.primitive {
                setup.primitive = p.parse().map_err(|e: convexshape::Error| ConfigError::Invalid(e.to_string()))?;
            }
            if let Some(l) = init.level {
                setup.level = l;
            }
        }
        if let Some(c) = raw.params.constrained {
            setup.constrained = c;
        }
        if setup.kind != ProblemKind::Custom && setup.dim() != ProblemSetup::builtin(kind).unwrap().dim() {
            return Err(ConfigError::Invalid(format!(
                "primitive `{}` has the wrong dimension for `{}`",
                setup.primitive.name(),
                kind.name()
            )));
        }
        fn expr_err(text: &str) -> impl FnOnce(ExprError) -> ConfigError + '_ {
            move |source| ConfigError::Expression {
                text: text.to_string(),
                source,
            }
        }
        ExprFunction::parse(&setup.rhs).map_err(expr_err(&setup.rhs))?;
        ExprIntegrand::parse(&setup.integrand).map_err(expr_err(&setup.integrand))?;
        if raw.levels == 0 {
            return Err(ConfigError::Invalid("levels must be at least 1".into()));
        }
        let params = build_params(&raw.params, setup.constrained)?;
        if let Some(h) = &raw.hold_all {
            if h.min.len() != setup.dim() || h.max.len() != setup.dim() {
                return Err(ConfigError::Invalid(format!(
                    "hold_all bounds need {} components",
                    setup.dim()
                )));
            }
            if h.min.iter().zip(&h.max).any(|(lo, hi)| !(lo < hi)) {
                return Err(ConfigError::Invalid("hold_all needs min < max".into()));
            }
        }
        Ok(Self {
            setup,
            levels: raw.levels,
            params,
            output: OutputConfig {
                dir: raw.output.dir,
                vtk: raw.output.vtk,
                svg: raw.output.svg,
                csv: raw.output.csv,
            },
            hold_all: raw.hold_all,
        })
    }
}

fn build_params(raw: &RawParams, constrained: bool) -> Result<AlgorithmParams, ConfigError> {
    let mut p = AlgorithmParams {
        constrained,
        ..AlgorithmParams::default()
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut p.t0, raw.t0);
    set(&mut p.beta, raw.beta);
    set(&mut p.sigma, raw.sigma);
    set(&mut p.m, raw.m);
    set(&mut p.beta_m, raw.beta_m);
    set(&mut p.eps_tol, raw.eps_tol);
    if let Some(tol) = raw.feasibility_tol {
        p.feasibility_tol = Some(tol);
    }
    set(&mut p.elasticity.mu, raw.mu);
    set(&mut p.elasticity.lambda, raw.lambda);
    set(&mut p.elasticity.delta, raw.delta);
    set(&mut p.qp.tol, raw.qp_tol);
    if let Some(n) = raw.max_outer {
        p.max_outer = n;
    }
    if let Some(n) = raw.max_backtracks {
        p.max_backtracks = n;
    }
    if let Some(n) = raw.qp_max_iter {
        p.qp.max_iter = n;
    }
    if let Some(s) = &raw.qp_strategy {
        p.strategy = s.parse::<QpStrategy>().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    if !(p.qp.tol > 0.0) || p.qp.max_iter == 0 {
        return Err(ConfigError::Invalid("qp_tol and qp_max_iter must be positive".into()));
    }
    p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(p)
}
