//! `stickyrelax`: batch front-end writing CSV reports and SVG plots.
//!
//! Exit codes: 0 success, 2 configuration or I/O, 3 numerical failure,
//! 4 comparison or validation failure.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Context;
use crate::config::{RunConfig, ToleranceOverrides};
use crate::error::Result;

#[derive(Parser)]
#[command(name = "stickyrelax", version, about = "Entropy solutions of pressureless damped Euler-Poisson with atomic data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evaluate m, q, u, E on the grid at each requested time.
    Solve,
    /// Run the sticky-particle oracle: event log and cluster tables.
    Oracle,
    /// Compare the formula layer with the oracle; exits 4 on mismatch.
    Compare,
    /// Relaxation study against the drift solution.
    Relax,
    /// Residual checks: Oleinik, weak form, identities, continuity, drift.
    Validate,
    /// Render SVG plots from the CSV files in the output directory.
    Plot,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, env = "STICKYRELAX_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true, env = "STICKYRELAX_OUT")]
    out: Option<PathBuf>,
    /// Seed for random instances.
    #[arg(long, global = true, env = "STICKYRELAX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long = "tol-tie", global = true, env = "STICKYRELAX_TOL_TIE")]
    tol_tie: Option<f64>,
    #[arg(long = "tol-position", global = true, env = "STICKYRELAX_TOL_POSITION")]
    tol_position: Option<f64>,
    #[arg(long = "tol-event", global = true, env = "STICKYRELAX_TOL_EVENT")]
    tol_event: Option<f64>,
    #[arg(long = "tol-root", global = true, env = "STICKYRELAX_TOL_ROOT")]
    tol_root: Option<f64>,
}

const DEFAULT_OUT: &str = "out";

fn context(common: Common, command: Command) -> Result<Context> {
    let config = match (&common.config, command) {
        (Some(path), _) => Some(RunConfig::load(path)?),
        (None, Command::Plot) => None,
        (None, _) => return Err(error::CliError::Config("no config given (use --config)".into())),
    };
    let out = common
        .out
        .or_else(|| config.as_ref().and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let flags = ToleranceOverrides {
        tie: common.tol_tie,
        position: common.tol_position,
        event: common.tol_event,
        root: common.tol_root,
    };
    for (name, v) in [("tie", flags.tie), ("position", flags.position), ("event", flags.event), ("root", flags.root)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(error::CliError::Config(format!("--tol-{name} must be positive, got {v}")));
            }
        }
    }
    let base = config.as_ref().map(|c| c.tolerances).unwrap_or_default();
    let tol = base.overlay(flags).resolve();
    Ok(Context { config, out, seed: common.seed, tol })
}

fn run(cli: Cli) -> Result<()> {
    let ctx = context(cli.common, cli.command)?;
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Oracle => commands::oracle(&ctx),
        Command::Compare => commands::compare(&ctx),
        Command::Relax => commands::relax(&ctx),
        Command::Validate => commands::validate(&ctx),
        Command::Plot => commands::plot(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
