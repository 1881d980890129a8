use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forge_core::experiment::{self, ExperimentConfig, ExperimentError, Kind};
use forge_core::threshold::round4;

#[derive(Parser)]
#[command(name = "forge", version, about = "Density-evolution thresholds and LDPC ensemble optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold of a fixed ensemble.
    Threshold(RunArgs),
    /// Optimize the coefficients of a fixed structure.
    Optimize(RunArgs),
    /// Jointly optimize structure and coefficients.
    Joint(RunArgs),
    /// Evaluate a two-dimensional grid of the cost function.
    Surface(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Base seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn execute(kind: Kind, args: &RunArgs) -> Result<(), ExperimentError> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if cfg.kind != kind {
        return Err(ExperimentError::Config(format!(
            "config describes a {:?} run, not {:?}",
            cfg.kind, kind
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = experiment::run_to_dir(&cfg, args.jobs, &args.out)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for t in &out.trials {
        let structure = t.structure.as_ref().map(|s| format!("  {s}")).unwrap_or_default();
        println!("trial {}: threshold {:.4} ({} generations){structure}", t.trial, round4(t.threshold), t.metrics.nog);
    }
    if let Some(s) = &out.surface {
        println!("surface: {} cells", s.cells.len());
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Threshold(a) => (Kind::Threshold, a),
        Command::Optimize(a) => (Kind::Optimize, a),
        Command::Joint(a) => (Kind::Joint, a),
        Command::Surface(a) => (Kind::Surface, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
