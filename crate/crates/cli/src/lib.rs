//! Command-line front end: Monte Carlo sweeps, closed-form tables and
//! figure presets, written as CSV or JSON with a reproducibility header.

pub mod args;
pub mod bounds;
pub mod error;
pub mod output;
pub mod presets;
pub mod simulate;

use misobc_core::montecarlo::Executor;

use crate::args::{Cli, Command};
pub use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A dedicated pool of `workers` threads, or rayon's global pool.
pub fn executor(workers: Option<usize>) -> Result<Executor, CliError> {
    match workers {
        None => Ok(Executor::global()),
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => Ok(Executor::new(n)?),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Bounds(a) => bounds::run(&a),
        Command::Figure(a) => presets::run(&a),
    }
}
