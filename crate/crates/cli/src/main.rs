//! `ngbound`: bound data for plotting, state checks and verification suites.
//!
//! Exit codes: 0 success, 1 other errors, 2 unwritable output (and usage
//! errors), 3 checked state below the bound, 4 invalid state file, 5 suite
//! violations. `NGB_THREADS` caps the worker pool.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CheckArgs, PureArgs, PurityBoundArgs, SurfaceArgs, VerifyArgs, WignerArgs};
use output::Failure;

#[derive(Parser)]
#[command(name = "ngbound", version, about = "Purity / Gaussian-overlap bound toolkit for single-mode states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the minimal-purity curve μ(μ_G).
    PurityBound(PurityBoundArgs),
    /// Evaluate the bound on a (μ_G, μ) grid.
    Surface(SurfaceArgs),
    /// Least overlap of pure states against μ_G.
    Pure(PureArgs),
    /// Place a state relative to the bound.
    Check(CheckArgs),
    /// Run the brute-force verification suites.
    Verify(VerifyArgs),
    /// Sample the Wigner function of a state.
    Wigner(WignerArgs),
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("NGB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Other(format!("NGB_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Other(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    init_threads()?;
    match &cli.command {
        Command::PurityBound(a) => commands::purity_bound(a),
        Command::Surface(a) => commands::surface(a),
        Command::Pure(a) => commands::pure(a),
        Command::Check(a) => commands::check(a),
        Command::Verify(a) => commands::verify(a),
        Command::Wigner(a) => commands::wigner(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}
