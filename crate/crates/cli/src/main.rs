// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_ghz::optim::RobustMethod;
use robust_ghz_cli::commands;
use robust_ghz_cli::config::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "robust-ghz", version, about = "Robust GHZ pulse synthesis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize robust and non-robust pulses for every uncertainty level.
    Sweep(Common),
    /// Phase-sensing curves from the swept pulses.
    Sense(Common),
    /// Pulse amplitudes and level-2 population tables.
    Pulsefig(Common),
    /// Sample the uncertainty box and check no point beats the worst corner.
    Audit(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Scp,
    Average,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Levels per site (2 or 3).
    #[arg(long)]
    levels: Option<usize>,
    /// Uncertainty levels ΔJ/J̄, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta_j: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Base seed; starts use consecutive seeds from here.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute outputs that already exist.
    #[arg(long)]
    force: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(cli: Cli) -> Result<bool> {
    let (Command::Sweep(c) | Command::Sense(c) | Command::Pulsefig(c) | Command::Audit(c)) = &cli.command;
    if let Some(n) = c.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply(&Overrides {
        levels: c.levels,
        delta_j: c.delta_j.clone(),
        method: c.method.map(|m| match m {
            Method::Scp => RobustMethod::Scp,
            Method::Average => RobustMethod::Average,
        }),
        seed: c.seed,
        out: c.out.clone(),
    });
    match cli.command {
        Command::Sweep(_) => commands::sweep(&cfg, c.force),
        Command::Sense(_) => commands::sense(&cfg, c.force),
        Command::Pulsefig(_) => commands::pulsefig(&cfg, c.force),
        Command::Audit(_) => commands::audit(&cfg, c.force),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some jobs failed; see manifest.json");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
