//! Command-line driver: `train`, `eval`, `generate`, `reconstruct`,
//! `interpolate` and `gradcheck`.
//!
//! Exit codes: 0 success, 1 runtime failure (or a failed gradient check),
//! 2 usage or config error, 3 numeric failure during training.

pub mod commands;
pub mod config;
pub mod error;
pub mod grid;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::*;
pub use config::{CheckpointMeta, DatasetSource, IdxPaths, RunConfig};
pub use error::{CliError, CliResult, EXIT_NUMERIC, EXIT_USAGE};

/// Environment variable capping matrix-multiply threads.
pub const THREADS_ENV: &str = "BICOGAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bicogan", version, about = "Train and inspect bidirectional conditional GANs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a JSON run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a checkpoint on its dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dataset and eval settings; defaults to those stored in the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid of samples: rows share z, columns share c.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        rows: usize,
        /// Column count for continuous c; categorical and binary c use every code.
        #[arg(long, default_value_t = 9)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Grid of test samples with their reconstructions and varied-c decodings.
    Reconstruct {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long)]
        variations: Option<usize>,
    },
    /// Decode points between the embeddings of two test samples.
    Interpolate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long, default_value_t = 8)]
        steps: usize,
    },
    /// Finite-difference check of every autodiff op.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Reads [`THREADS_ENV`]; unset means one thread.
pub fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn load_opt(path: Option<&PathBuf>) -> CliResult<Option<RunConfig>> {
    path.map(|p| RunConfig::load(p)).transpose()
}

/// Runs one parsed command; returns the process exit code.
pub fn run(cli: Cli) -> CliResult<i32> {
    bicogan_core::set_max_threads(threads_from_env()?);
    match cli.command {
        Command::Train { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if let Some(seed) = seed {
                cfg.training.seed = seed;
            }
            let report = cmd_train(&cfg)?;
            println!("trained {} epochs; report in {}", report.epoch, cfg.out_dir.join(REPORT_JSON).display());
        }
        Command::Eval { checkpoint, out, config, seed } => {
            let cfg = load_opt(config.as_ref())?;
            let report = cmd_eval(&checkpoint, &out, cfg.as_ref(), seed)?;
            println!("{}\n{}", bicogan_core::eval::MetricsReport::csv_header(), report.csv_row());
        }
        Command::Generate { checkpoint, out, rows, cols, seed } => {
            let path = cmd_generate(&checkpoint, &out, rows, cols, seed)?;
            println!("{}", path.display());
        }
        Command::Reconstruct { checkpoint, out, config, count, variations } => {
            let cfg = load_opt(config.as_ref())?;
            let path = cmd_reconstruct(&checkpoint, &out, cfg.as_ref(), count, variations)?;
            println!("{}", path.display());
        }
        Command::Interpolate { checkpoint, out, config, from, to, steps } => {
            let cfg = load_opt(config.as_ref())?;
            let path = cmd_interpolate(&checkpoint, &out, cfg.as_ref(), from, to, steps)?;
            println!("{}", path.display());
        }
        Command::Gradcheck { points, seed } => {
            let checks = cmd_gradcheck(points, seed)?;
            for c in &checks {
                println!(
                    "{:<24} worst_rel_err={:.3e} {}",
                    c.name,
                    c.worst_rel_err,
                    if c.passed { "PASS" } else { "FAIL" }
                );
            }
            if !checks.iter().all(|c| c.passed) {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs; errors go to stderr.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
