//! Configuration, problem definitions and artifact writers for the
//! `convexshape` command line tool.

pub mod config;
pub mod driver;
pub mod expr;
pub mod output;
pub mod problems;

pub use config::{ConfigError, RunConfig};
pub use driver::{run_config, LevelReport, RunError, RunOverrides, RunReport};
pub use expr::{parse_expression, Expr, ExprError, ExprFunction, ExprIntegrand};
