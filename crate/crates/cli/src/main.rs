//! `cgl-lab`: runs one experiment and writes its artifacts.
//!
//! Precedence of settings: configuration file < `CGL_*` environment
//! variables < `--set key=value` < dedicated flags.

use std::path::PathBuf;
use std::process::ExitCode;

use cgl_core::harness::{error_report, execute, ExperimentConfig, ExperimentKind};
use cgl_core::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgl-lab", version, about = "Spectral Monte Carlo lab for the stochastic complex Ginzburg-Landau equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and dump coefficients and functionals
    Simulate(Common),
    /// Sample a stationary ensemble: balance, densities, small balls
    Stats(Common),
    /// Local-time field of a functional along one trajectory
    Localtime(Common),
    /// Stationary local-time identity for g(||u||^2)
    Identity(Common),
    /// Viscosity sweep with horizon t0 / nu
    Sweep(Common),
    /// Built-in analytic oracle checks
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: cgl-out/<kind>)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (0 = automatic)
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
    /// Extra `key=value` override; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn resolve(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    for o in &args.overrides {
        cfg.apply_text(o)?;
    }
    cfg.kind = kind;
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from("cgl-out").join(kind.name()));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Stats(a) => (ExperimentKind::Stats, a),
        Command::Localtime(a) => (ExperimentKind::LocalTime, a),
        Command::Identity(a) => (ExperimentKind::Identity, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
    };
    match resolve(kind, args).and_then(|cfg| execute(&cfg).map(|m| (cfg, m))) {
        Ok((cfg, manifest)) => {
            let dir = cfg.out.unwrap_or_default();
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", dir.join("manifest.json").display());
            if manifest.passed == Some(false) {
                eprintln!("{kind}: checks failed", kind = kind.name());
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}", error_report(&e));
            ExitCode::from(2)
        }
    }
}
