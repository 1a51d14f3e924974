//! Multi-level optimize/refine driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use convexshape::convexity::constraint_values;
use convexshape::fem::solve_state_with;
use convexshape::mesh::{generate_primitive, uniform_refine, SimplicialMesh};
use convexshape::optimize::{run, OptTrace, Termination};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::expr::ExprError;
use crate::output::{svg2d, vtk_legacy, write_atomic, ExportError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error(transparent)]
    Core(#[from] convexshape::Error),

    #[error(transparent)]
    Export(#[from] ExportError),

    #[error("level {level} failed: {reason}")]
    Level { level: usize, reason: String },
}

impl RunError {
    /// 1 for configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Expr(_) => 1,
            _ => 2,
        }
    }
}

/// Command line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub out: Option<PathBuf>,
    pub levels: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: usize,
    pub vertices: usize,
    pub cells: usize,
    pub iterations: usize,
    pub accepted: usize,
    pub termination: Termination,
    pub objective: f64,
    /// Largest convexity constraint value of the final mesh.
    pub max_c: f64,
    /// `max_c` exceeds `1e-8 diam²`.
    pub nonconvex: bool,
    pub within_hold_all: Option<bool>,
    pub convexified: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub levels: Vec<LevelReport>,
    pub final_mesh: SimplicialMesh,
    pub out_dir: PathBuf,
}

pub const SUMMARY_HEADER: &str =
    "level,vertices,cells,iterations,accepted,termination,J,maxC,nonconvex,hold_all,convexified";

fn summary_csv(levels: &[LevelReport]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in levels {
        let hold = match r.within_hold_all {
            Some(true) => "inside",
            Some(false) => "outside",
            None => "",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.17e},{:.17e},{},{},{}",
            r.level,
            r.vertices,
            r.cells,
            r.iterations,
            r.accepted,
            r.termination.as_str(),
            r.objective,
            r.max_c,
            r.nonconvex,
            hold,
            r.convexified
        );
    }
    s
}

fn write_failed(dir: &Path, reason: &str) {
    // best effort: the original error is what gets reported
    let _ = write_atomic(&dir.join("FAILED"), format!("{reason}\n").as_bytes());
}

pub fn run_config(
    config: &RunConfig,
    overrides: &RunOverrides,
    mut on_level: impl FnMut(&LevelReport),
) -> Result<RunReport, RunError> {
    let levels = overrides.levels.unwrap_or(config.levels);
    if levels == 0 {
        return Err(ConfigError::Invalid("levels must be at least 1".into()).into());
    }
    let out_dir = overrides.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let problem = config.setup.spec()?;
    std::fs::create_dir_all(&out_dir).map_err(|source| ExportError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let stale = out_dir.join("FAILED");
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|source| ExportError::Io {
            path: stale.display().to_string(),
            source,
        })?;
    }

    let mut reports = Vec::new();
    let mut level_result = |level: usize, mesh: &SimplicialMesh| -> Result<(SimplicialMesh, OptTrace), RunError> {
        let outcome = run(mesh, &problem, &config.params)?;
        let final_mesh = outcome.mesh;
        let trace = outcome.trace;
        let u = solve_state_with(&final_mesh, &problem, config.params.solve)?;
        let cs = constraint_values(&final_mesh)?;
        let max_c = cs.max_value();
        let diam = final_mesh.diameter();
        let report = LevelReport {
            level,
            vertices: final_mesh.num_vertices(),
            cells: final_mesh.num_cells(),
            iterations: trace.records.len(),
            accepted: trace.accepted_steps(),
            termination: trace.termination.clone(),
            objective: trace.final_objective().unwrap_or(f64::NAN),
            max_c,
            nonconvex: max_c > 1e-8 * diam * diam,
            within_hold_all: config
                .hold_all
                .as_ref()
                .map(|h| (0..final_mesh.num_vertices()).all(|v| h.contains(final_mesh.point(v)))),
            convexified: outcome.convexified,
        };
        let stem = format!("level{level}");
        if config.output.vtk {
            let title = format!("{} level {level}", config.setup.kind.name());
            let vtk = vtk_legacy(&final_mesh, &[("u", &u)], &title)?;
            write_atomic(&out_dir.join(format!("{stem}.vtk")), vtk.as_bytes())?;
        }
        if config.output.svg && final_mesh.dim() == 2 {
            write_atomic(&out_dir.join(format!("{stem}.svg")), svg2d(&final_mesh, Some(&u))?.as_bytes())?;
        }
        if config.output.csv {
            write_atomic(&out_dir.join(format!("{stem}.csv")), trace.to_csv().as_bytes())?;
        }
        on_level(&report);
        reports.push(report);
        write_atomic(&out_dir.join("summary.csv"), summary_csv(&reports).as_bytes())?;
        if let Termination::StepFailure(reason) = &trace.termination {
            return Err(RunError::Level {
                level,
                reason: reason.clone(),
            });
        }
        Ok((final_mesh, trace))
    };

    let mut mesh = match generate_primitive(config.setup.primitive, config.setup.level) {
        Ok(m) => m,
        Err(e) => {
            write_failed(&out_dir, &e.to_string());
            return Err(e.into());
        }
    };
    for level in 0..levels {
        let result = level_result(level, &mesh).and_then(|(m, _)| {
            if level + 1 < levels {
                Ok(uniform_refine(&m)?)
            } else {
                Ok(m)
            }
        });
        match result {
            Ok(m) => mesh = m,
            Err(e) => {
                write_failed(&out_dir, &e.to_string());
                return Err(e);
            }
        }
    }
    Ok(RunReport {
        levels: reports,
        final_mesh: mesh,
        out_dir,
    })
}
