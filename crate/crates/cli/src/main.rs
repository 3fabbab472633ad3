//! `alphys`: runs the active-learning, weak-measurement and Monte Carlo
//! experiments from JSON configs and writes CSV artifacts.
//!
//! Exit codes: 0 success, 1 failed validation or runtime error, 2 bad
//! config or arguments, 3 I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<alphys::Error> for CliError {
    fn from(e: alphys::Error) -> Self {
        match e {
            alphys::Error::Io(m) => CliError::Io(m),
            alphys::Error::InvalidArgument(m) => CliError::Config(m),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "alphys", version, about = "Active learning, weak measurement and CTQMC experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; a flag beats the config file, which
/// beats the built-in default.
#[derive(Debug, Clone, Args)]
pub struct Global {
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; trial `i` uses the stream `seed ^ i`.
    #[arg(long, global = true, env = "ALPHYS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the qutrit and phase-diagram datasets.
    Dataset {
        #[command(subcommand)]
        action: DatasetCmd,
    },
    /// Active-learning trial batches.
    Al {
        #[command(subcommand)]
        problem: AlCmd,
    },
    /// Self-training after active learning.
    Ssl {
        #[command(subcommand)]
        problem: SslCmd,
    },
    /// Continuous-time Monte Carlo.
    Ctqmc {
        #[command(subcommand)]
        action: CtqmcCmd,
    },
    /// Weak-measurement population retrieval.
    Reconstruct {
        #[command(subcommand)]
        action: ReconstructCmd,
    },
    /// Evaluate a saved model on its dataset grid.
    Heatmap {
        /// Model snapshot written by an `al` or `ssl` run.
        #[arg(long)]
        model: PathBuf,
        /// Qutrit grid for logistic and naive Bayes snapshots.
        #[arg(long, default_value = "case1", value_parser = ["case1", "case2"])]
        case: String,
    },
}

#[derive(Debug, Subcommand)]
enum DatasetCmd {
    Gen,
}

#[derive(Debug, Subcommand)]
enum AlCmd {
    Qutrit,
    Phase,
}

#[derive(Debug, Subcommand)]
enum SslCmd {
    Phase,
}

#[derive(Debug, Subcommand)]
enum CtqmcCmd {
    Run,
    /// Compare against exact diagonalization and test cut statistics.
    Validate,
}

#[derive(Debug, Subcommand)]
enum ReconstructCmd {
    Demo,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    if g.workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.workers)
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Dataset { action: DatasetCmd::Gen } => commands::dataset_gen(&g),
        Command::Al { problem: AlCmd::Qutrit } => commands::al_qutrit(&g),
        Command::Al { problem: AlCmd::Phase } => commands::al_phase(&g),
        Command::Ssl { problem: SslCmd::Phase } => commands::ssl_phase(&g),
        Command::Ctqmc { action: CtqmcCmd::Run } => commands::ctqmc_run(&g),
        Command::Ctqmc { action: CtqmcCmd::Validate } => commands::ctqmc_validate(&g),
        Command::Reconstruct { action: ReconstructCmd::Demo } => commands::reconstruct_demo(&g),
        Command::Heatmap { model, case } => commands::heatmap(&g, &model, &case),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alphys: {e}");
            ExitCode::from(e.code())
        }
    }
}
