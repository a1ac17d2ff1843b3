//! `krmap`: evaluate, fit, sample and study Knothe–Rosenblatt transports
//! from JSON experiment configs.
//!
//! Exit codes: `0` success, `2` configuration error, `3` numerical failure,
//! `1` I/O error. Failures are reported on stderr as
//! `{"error": {"kind": ..., "message": ...}}`.

mod commands;
mod config;
mod error;

use std::env;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{CommandKind, ExperimentConfig};
use crate::error::CliError;

/// Environment variable overriding the worker thread count of the config
/// (the `--threads` flag takes precedence over both).
const THREADS_ENV: &str = "KRMAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "krmap", version, about = "Knothe–Rosenblatt transports on [-1,1]^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads; overrides KRMAP_THREADS and the config.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a map at points read from a CSV file.
    Transport {
        #[command(subcommand)]
        action: TransportAction,
    },
    /// Fit and serialize an approximate transport.
    Approx {
        #[command(subcommand)]
        action: ApproxAction,
    },
    /// Distances between two densities, or between a map pullback and the target.
    Distance,
    /// Push seeded uniform samples through a map.
    Sample,
    /// Run an experiment sweep.
    Study {
        #[command(subcommand)]
        kind: StudyKind,
    },
}

#[derive(Debug, Subcommand)]
enum TransportAction {
    Eval,
}

#[derive(Debug, Subcommand)]
enum ApproxAction {
    Build,
}

#[derive(Debug, Subcommand)]
enum StudyKind {
    /// ε-sweep with an exponential rate fit.
    Convergence,
    /// High-dimensional ε-sweep with an algebraic rate fit.
    Truncation,
    /// Posterior sampling demo.
    Posterior,
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Transport { action: TransportAction::Eval } => CommandKind::TransportEval,
            Command::Approx { action: ApproxAction::Build } => CommandKind::ApproxBuild,
            Command::Distance => CommandKind::Distance,
            Command::Sample => CommandKind::Sample,
            Command::Study { kind: StudyKind::Convergence } => CommandKind::StudyConvergence,
            Command::Study { kind: StudyKind::Truncation } => CommandKind::StudyTruncation,
            Command::Study { kind: StudyKind::Posterior } => CommandKind::StudyPosterior,
        }
    }
}

fn thread_count(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(config),
    }
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cmd = cli.command.kind();
    let path = cli.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let config = ExperimentConfig::load(&path)?;
    config.validate(cmd)?;
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    if let Some(n) = thread_count(cli.threads, config.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let ctx = Context { config, out_dir: cli.out, seed };
    commands::run(cmd, &ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
