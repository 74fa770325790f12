//! `recon`: code construction, reconciliation sessions, FER sweeps and
//! density-evolution thresholds.

mod commands;
mod config;
mod grid;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;

/// Exit status of a run.
#[derive(Debug)]
pub enum CliError {
    /// Decoding or protocol failure (exit 1).
    Failure(String),
    /// Bad arguments or input files (exit 2).
    Usage(String),
    /// Reading or writing failed (exit 3).
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Self::Failure(_) => 1,
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Failure(m) | Self::Usage(m) | Self::Io(m) => f.write_str(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "recon", version, about = "Rate-compatible LDPC reconciliation over the BSC")]
pub struct Cli {
    /// key=value file with defaults for any long option.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for Monte Carlo trials (default: $RECON_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a parity-check matrix by progressive edge growth and write it as alist.
    Construct(ConstructArgs),
    /// Run one reconciliation session over BSC(p) and print a JSON report.
    Reconcile(ReconcileArgs),
    /// Largest correctable crossover for each (rate, delta); CSV `rate,delta,max_ber,f`.
    Sweep(SweepArgs),
    /// Density-evolution thresholds; CSV `rate,delta,threshold_p`.
    Threshold(ThresholdArgs),
    /// Stability of the zero-error fixed point.
    Stability(StabilityArgs),
}

/// Degree distribution, from a file or as a regular pair.
#[derive(Args, Debug)]
pub struct EnsembleArgs {
    /// Ensemble file with `lambda: <degree> <coeff>` and `rho: <degree> <coeff>` lines.
    #[arg(long, value_name = "FILE", conflicts_with = "regular")]
    pub ensemble: Option<PathBuf>,
    /// Regular ensemble `dv,dc`.
    #[arg(long, value_name = "DV,DC")]
    pub regular: Option<String>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Code length (default 10000).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output alist path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReconcileArgs {
    #[arg(long, value_name = "FILE")]
    pub alist: Option<PathBuf>,
    /// Reserved fraction (default 0.1).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Channel crossover probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Sample size (default n/20).
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `data` or `key`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Use this rate whatever the estimate.
    #[arg(long, conflicts_with = "efficiency")]
    pub rate: Option<f64>,
    /// CSV of `p,f` points for the efficiency model.
    #[arg(long, value_name = "FILE")]
    pub efficiency: Option<PathBuf>,
    /// Round the target rate to a multiple of this step.
    #[arg(long)]
    pub rate_step: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Pre-shared layout seed (default: the session seed).
    #[arg(long)]
    pub layout_seed: Option<u64>,
    #[arg(long)]
    pub nonce: Option<u64>,
    /// Act as Bob, accepting one TCP connection on ADDR.
    #[arg(long, value_name = "ADDR", conflicts_with = "connect")]
    pub listen: Option<String>,
    /// Act as Alice, connecting to Bob at ADDR.
    #[arg(long, value_name = "ADDR")]
    pub connect: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_name = "FILE")]
    pub alist: Option<PathBuf>,
    /// Rates as `lo:hi:step` or a comma list.
    #[arg(long)]
    pub rates: Option<String>,
    /// Reserved fractions, comma list (default 0.1,0.25,0.5).
    #[arg(long)]
    pub deltas: Option<String>,
    /// Trials per crossover probability (default 200).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Largest acceptable frame error rate (default 0.1).
    #[arg(long)]
    pub fer: Option<f64>,
    /// Crossover grid `lo:hi:step` (default 0.0005:0.15:0.0005).
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path (default stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Rates as `lo:hi:step` or a comma list (default: the design rate).
    #[arg(long)]
    pub rates: Option<String>,
    /// Quantization step (default 0.01).
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Half-width of the LLR support (default 30).
    #[arg(long)]
    pub support: Option<f64>,
    /// Bisection tolerance on p (default 1e-4).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Punctured fraction; the shortened fraction is delta - pi.
    #[arg(long)]
    pub pi: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let threads = cfg
        .pick_opt(cli.threads, "threads")?
        .or_else(|| std::env::var("RECON_THREADS").ok()?.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    match cli.command {
        Command::Construct(a) => commands::construct(a, &cfg),
        Command::Reconcile(a) => commands::reconcile(a, &cfg),
        Command::Sweep(a) => commands::sweep(a, &cfg, threads),
        Command::Threshold(a) => commands::threshold(a, &cfg),
        Command::Stability(a) => commands::stability(a, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !matches!(err, CliError::Failure(_)) {
                eprintln!("recon: {err}");
            }
            ExitCode::from(err.code())
        }
    }
}
