//! Batch driver for monitored East circuit sweeps.

mod commands;
mod config;
mod list;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

const AFTER_HELP: &str = "\
Every subcommand reads an optional JSON config (--config) and applies flags on
top of it. Each output file gets a JSON sidecar holding the full configuration,
which can be passed back via --config to reproduce the run.

Dense objects are bounded by two environment variables:
  FLOQUET_EAST_MAX_STATEVECTOR_QUBITS  (default 12; a state vector takes 16·2^L bytes)
  FLOQUET_EAST_MAX_DENSITY_QUBITS      (default 10; a density matrix takes 16·4^L bytes,
                                        the real working copies about 24·4^L bytes)

Exit status: 0 on success, 1 on configuration or I/O errors, 2 if some sweep
points failed (they are listed on stderr and the rest is still written).";

#[derive(Debug, Parser)]
#[command(name = "floquet-east", version, about, after_help = AFTER_HELP)]
struct Cli {
    /// JSON configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Recompute every point instead of reusing checkpoints in the output directory.
    #[arg(long, global = true)]
    no_resume: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample measurement records (quantum trajectories or the classical chain).
    Sample(config::SampleArgs),
    /// Activity a(s) and crossover s* over a (γ, L) grid.
    PhaseDiagram(config::PhaseDiagramArgs),
    /// Inactive-cluster free energies, area/perimeter fits and τ*.
    Clusters(config::ClustersArgs),
    /// Deviation of the effective East chain from the full channel.
    Effective(config::EffectiveArgs),
    /// Infinite-time SCGF and activity of the classical chain.
    ClassicalScgf(config::ClassicalScgfArgs),
}

pub struct Context {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub resume: bool,
}

/// Sweep points that failed; the run continues past them.
pub type Failures = Vec<String>;

fn run(cli: Cli) -> Result<Failures> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let ctx = Context {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        resume: !cli.no_resume,
    };
    match &cli.command {
        Command::Sample(a) => commands::sample::run(&ctx, a),
        Command::PhaseDiagram(a) => commands::phase::run(&ctx, a),
        Command::Clusters(a) => commands::clusters::run(&ctx, a),
        Command::Effective(a) => commands::effective::run(&ctx, a),
        Command::ClassicalScgf(a) => commands::classical::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{} point(s) failed:", failures.len());
            for f in &failures {
                eprintln!("  {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
