//! `ratefront` — command-line surface over the workbench.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 numerical
//! failure (divergence, failed identity checks, degenerate fits).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ratefront",
    version,
    about = "Exact workbench for rate/classification/distortion/entropy frontiers"
)]
struct Cli {
    /// Output directory (falls back to $RATEFRONT_OUT_DIR, then ./ratefront-out)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the mixture scale so the exact discretized I(x;z) hits a target
    Calibrate {
        #[arg(long)]
        target_rate: f64,
        /// Optional file for the spec JSON (also printed to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a finite dataset (or emit the exact infinite marginal)
    GenData {
        #[arg(long, default_value_t = 0.5)]
        target_rate: f64,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        infinite: bool,
    },
    /// Train one model from a JSON config
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train a grid of multiplier settings and emit the frontier
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep plus Maxwell-relation and capacity reports
    Maxwell {
        #[arg(long)]
        config: PathBuf,
    },
    /// Partition function, Boltzmann posterior, min-J identity and exact
    /// Markov relaxation on an enumerable parameter grid
    Boltzmann {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tempered conjugate-Bayes (U, S) frontier
    Bayes {
        #[arg(long)]
        config: PathBuf,
    },
    /// Brute-force identity suite on randomized tiny worlds
    VerifyWorld {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        worlds: usize,
    },
    /// Run the named objective-zoo settings and emit their tables
    Zoo {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failures carry the exit class with them.
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ratefront_core::Error> for Failure {
    fn from(e: ratefront_core::Error) -> Self {
        use ratefront_core::Error::*;
        let msg = e.to_string();
        match e {
            Diverged { .. }
            | NonFiniteParameter(_)
            | InvalidAlpha { .. }
            | NonFiniteGradient(_)
            | RankDeficient(_)
            | InsufficientNeighbors { .. }
            | InsufficientSigmaVariation(_)
            | AllEnergiesInfinite => Failure::Numerical(msg),
            _ => Failure::Validation(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(format!("config error: {e}"))
    }
}

fn resolve_out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| std::env::var_os("RATEFRONT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ratefront-out"))
}

fn run() -> Result<(), Failure> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit 0
            if e.use_stderr() {
                return Err(Failure::Validation(e.to_string()));
            }
            print!("{e}");
            return Ok(());
        }
    };
    let out_dir = resolve_out_dir(&cli);
    match cli.command {
        Command::Calibrate { target_rate, out } => commands::calibrate(target_rate, out),
        Command::GenData {
            target_rate,
            n,
            seed,
            infinite,
        } => commands::gen_data(&out_dir, target_rate, n, seed, infinite),
        Command::Train { config } => commands::train(&out_dir, &config),
        Command::Sweep { config } => commands::sweep(&out_dir, &config),
        Command::Maxwell { config } => commands::maxwell(&out_dir, &config),
        Command::Boltzmann { config } => commands::boltzmann(&out_dir, &config),
        Command::Bayes { config } => commands::bayes(&out_dir, &config),
        Command::VerifyWorld { seed, worlds } => commands::verify_world(&out_dir, seed, worlds),
        Command::Zoo { config } => commands::zoo(&out_dir, &config),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
