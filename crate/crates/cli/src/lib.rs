//! Batch front end for the `vesselseg` binary: run configuration, dataset
//! discovery, image IO and the `segment`, `evaluate`, `roc` and `phantom`
//! commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod io;

pub use args::Cli;
pub use config::RunConfig;
pub use error::{CliError, Result};

use args::Command;
use commands::Outcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IMAGE_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Segment(a) => commands::segment_command(a),
        Command::Evaluate(a) => commands::evaluate_command(a),
        Command::Roc(a) => commands::roc_command(a),
        Command::Phantom(a) => commands::phantom_command(a),
    };
    match result {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::PartialFailure) => EXIT_IMAGE_FAILURE,
        Err(e) => {
            log::error!("{e}");
            EXIT_CONFIG
        }
    }
}
