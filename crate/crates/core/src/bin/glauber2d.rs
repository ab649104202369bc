//! Command-line driver. Every subcommand loads a TOML config, applies the
//! flag overrides, and hands off to the experiment drivers.
//!
//! Exit codes: 0 success, 2 an experiment-level assertion failed, 3 a
//! configuration or setup problem.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use glauber2d::config::{ExperimentConfig, ExperimentKind};
use glauber2d::experiments;

#[derive(Parser)]
#[command(
    name = "glauber2d",
    about = "Continuous-time Glauber dynamics experiments on the 2D Ising lattice"
)]
struct Cli {
    /// Experiment to run; must match the config's `experiment` field
    #[arg(value_parser = parse_kind)]
    experiment: ExperimentKind,
    /// TOML experiment configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replica count
    #[arg(long)]
    replicas: Option<u32>,
    /// Override the config's output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    ExperimentKind::from_name(s).ok_or_else(|| format!("unknown experiment '{}'", s))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(3);
        }
    };
    if cfg.experiment != cli.experiment {
        eprintln!(
            "error: config is for '{}' but '{}' was requested",
            cfg.experiment.name(),
            cli.experiment.name()
        );
        return ExitCode::from(3);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }

    match experiments::run(&cfg) {
        Ok(report) => {
            for line in &report.summary {
                println!("{}", line);
            }
            if report.ok() {
                println!("ok: {} artifacts in {}", cfg.experiment.name(), cfg.out.display());
                ExitCode::SUCCESS
            } else {
                for v in &report.violations {
                    eprintln!("assertion failed: {}", v);
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(3)
        }
    }
}
