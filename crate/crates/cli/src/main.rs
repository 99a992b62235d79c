mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use trigan_core::tri_gan::GyLossMode;
use trigan_core::variants::Variant;

use config::RunConfig;

/// Three-pair GAN for supported/refuted claims: training, evaluation,
/// data generation and analytic checks.
#[derive(Parser)]
#[command(name = "trigan", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed (overrides `train.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    variant: Option<Variant>,
    /// Output directory (overrides `out`; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "gy-loss", global = true)]
    gy_loss: Option<GyLossMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write checkpoint, telemetry and run summary.
    Train,
    /// Score a checkpoint's classifier on a dataset CSV or the test split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Write the configured dataset and its splits as CSV.
    GenData,
    /// Enumerate the discrete equilibrium problem and check its optimum.
    VerifyEquilibrium,
    /// Compare backprop with finite differences for all six nets.
    GradCheck,
    /// Seeded repeats of `train` with mean ± std over the test metrics.
    Repeat {
        /// Overrides `repeats`.
        #[arg(long)]
        runs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if let Some(mode) = cli.gy_loss {
        cfg.train.gy_loss = mode;
    }
    if let Command::Repeat { runs: Some(r) } = cli.command {
        cfg.repeats = r;
    }
    cfg.validate().context("invalid config")?;
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));

    match cli.command {
        Command::Train => commands::cmd_train(&cfg, &out)?,
        Command::Eval { checkpoint, dataset } => commands::cmd_eval(&cfg, &checkpoint, dataset.as_deref(), &out)?,
        Command::GenData => commands::cmd_gen_data(&cfg, &out)?,
        Command::VerifyEquilibrium => return Ok(commands::cmd_verify_equilibrium(&cfg, &out)?.passed),
        Command::GradCheck => return Ok(commands::cmd_grad_check(&cfg, &out)?.iter().all(|r| r.passed)),
        Command::Repeat { .. } => {
            commands::cmd_repeat(&cfg, &out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
