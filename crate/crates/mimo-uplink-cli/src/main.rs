//! `mimo-uplink`: evaluate uplink spectral efficiency of multi-cell massive
//! MIMO networks under joint-decoding interference schemes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error,
//! 4 capacity error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mimo_uplink_cli::{optimize_command, run_command};

#[derive(Parser)]
#[command(name = "mimo-uplink", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the schemes requested by a spec file, optionally over a
    /// parameter sweep, and write one CSV row per (scheme, backend, point).
    Run {
        /// Run-specification TOML file.
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV path (a .meta.toml sidecar is written next to it).
        #[arg(long)]
        out: PathBuf,
        /// Override the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = automatic).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Exhaustively rank every interval/cluster configuration of the
    /// optimized scheme and write the full table.
    Optimize {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { spec, out, seed, threads } => {
            init_threads(threads).and_then(|()| run_command(&spec, &out, seed))
        }
        Command::Optimize { spec, out, seed, threads } => {
            init_threads(threads).and_then(|()| optimize_command(&spec, &out, seed))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn init_threads(threads: usize) -> Result<(), mimo_uplink_cli::CliError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| mimo_uplink_cli::CliError::Config(format!("thread pool: {e}")))
}
