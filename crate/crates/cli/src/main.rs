//! `dualwave` command-line driver. Each subcommand reads a JSON
//! configuration and writes result bundles under the output directory.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical
//! non-convergence.

mod bundle;
mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

type Handler = fn(&Path, &Path) -> Result<bool, CliError>;

#[derive(Parser)]
#[command(name = "dualwave", version, about = "Traveling waves of the semi-discrete Burgers lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the result bundles.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the advance-delay profile equation with the finite-element dual solver.
    SolveDde(RunArgs),
    /// Solve the integral equation at one far-field value.
    SolveNie(RunArgs),
    /// Follow the integral-equation solution branch in the far-field value.
    Sweep(RunArgs),
    /// Run Petviashvili iteration.
    Pv(RunArgs),
    /// Evolve a stored profile on the lattice and measure its translation error.
    Evolve(RunArgs),
    /// Solve on a sequence of refined meshes and report convergence metrics.
    Verify(RunArgs),
    /// Spectrum of the stability matrix of a stored profile.
    Spectrum(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, args) = match &cli.command {
        Command::SolveDde(a) => (commands::solve_dde_cmd as Handler, a),
        Command::SolveNie(a) => (commands::solve_nie_cmd as Handler, a),
        Command::Sweep(a) => (commands::sweep_cmd as Handler, a),
        Command::Pv(a) => (commands::pv_cmd as Handler, a),
        Command::Evolve(a) => (commands::evolve_cmd as Handler, a),
        Command::Verify(a) => (commands::verify_cmd as Handler, a),
        Command::Spectrum(a) => (commands::spectrum_cmd as Handler, a),
    };
    match run(&args.config, &args.out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("run did not converge; partial results written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
