//! Command line front end for the damped pulse-area solver.
//!
//! Exit codes: 0 success, 1 bad arguments or configuration, 2 solver
//! failure, 3 hard self-check failure.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use commands::CliError;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pulse-area",
    version,
    about = "Solve the damped pulse-area equation for a microwave pulse \
             crossing a chain of lossy superconducting qubits"
)]
struct Cli {
    /// Path to a key = value run configuration; defaults apply without one.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, overriding the configuration file.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the damping sweep and write one trajectory table per value.
    Simulate,
    /// Write the data behind one standard plot (1 area, 2 envelope, 3 phase).
    Figures {
        /// Figure number.
        #[arg(long)]
        which: u32,
    },
    /// Solve every sweep entry with both routes and print the self-check
    /// summary; exits 3 when a hard invariant fails.
    Audit,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Figures { which } => commands::cmd_figures(&cfg, which),
        Command::Audit => commands::cmd_audit(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help goes to stdout, errors to stderr; clap picks the stream.
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
