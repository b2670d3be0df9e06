//! `conevol`: corpus generation, verification sweeps, solver runs and convergence studies.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "conevol",
    version,
    about = "Cone-volume measures of smooth convex bodies: checks and solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config (all sections optional).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Corpus seed (used when the config has no [corpus] section or no seed of its own).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sphere dimension n: 1 for planar bodies, 2 for bodies in R³.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: Option<u8>,
    /// Harmonic degree L.
    #[arg(long, global = true)]
    degree: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded corpus of bodies plus manifest.json.
    GenCorpus,
    /// Run the inequality and identity checks over a corpus (CSV + JSON report).
    Verify,
    /// Solve the Lp-Minkowski equation from one initial body.
    Solve,
    /// Solve from several starts and compare the solutions.
    ProbeUniqueness,
    /// Self-similar solves over a grid of exponents and initial perturbations.
    Sweep,
    /// Errors of curvature and identity residuals against the harmonic degree.
    ConvergenceStudy,
}

fn load_config(common: &Common) -> Result<(ExperimentConfig, u64)> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(n) = common.dim {
        if cfg.dimension != n as usize {
            cfg.dimension = n as usize;
            cfg.resolution = None;
        }
    }
    if let Some(l) = common.degree {
        cfg.degree = Some(l);
    }
    let seed = common.seed.unwrap_or(42);
    if let (Some(spec), Some(s)) = (cfg.corpus.as_mut(), common.seed) {
        spec.seed = s;
    }
    cfg.validate()?;
    Ok((cfg, seed))
}

fn run(cli: &Cli) -> Result<Outcome> {
    let (cfg, seed) = load_config(&cli.common)?;
    match cli.command {
        Command::GenCorpus => commands::gen_corpus(&cfg, seed),
        Command::Verify => commands::verify(&cfg),
        Command::Solve => commands::solve(&cfg),
        Command::ProbeUniqueness => commands::probe(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::ConvergenceStudy => commands::convergence(&cfg),
    }
}

/// The error chain on one line, leaving out causes whose text already appears earlier.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
