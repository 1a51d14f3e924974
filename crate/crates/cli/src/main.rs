use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use convexshape_cli::{run_config, RunConfig, RunOverrides};

#[derive(Parser)]
#[command(name = "convexshape", version, about = "Shape optimization under convexity constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize and refine for the configured number of levels.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of optimize-refine cycles, overriding `levels`.
        #[arg(long)]
        levels: Option<usize>,
        /// Recorded in the log; the pipeline itself is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a config without running it.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { config } => match RunConfig::load(&config) {
            Ok(c) => {
                println!(
                    "ok: {} on {} level {}, {} level(s)",
                    c.setup.kind.name(),
                    c.setup.primitive.name(),
                    c.setup.level,
                    c.levels
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run {
            config,
            out,
            levels,
            seed,
        } => {
            let config = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = seed {
                println!("seed {s}");
            }
            let overrides = RunOverrides { out, levels, seed };
            let result = run_config(&config, &overrides, |r| {
                println!(
                    "level {}: {} vertices, {} iterations ({}), J = {:.10e}, max C = {:.3e}",
                    r.level,
                    r.vertices,
                    r.iterations,
                    r.termination.as_str(),
                    r.objective,
                    r.max_c
                );
            });
            match result {
                Ok(report) => {
                    println!("artifacts in {}", report.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
