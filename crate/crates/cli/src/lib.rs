//! Front end for the `feedback-phase` simulator: flags and config files,
//! the `trajectory`, `phase`, `sweep` and `verify` subcommands, and
//! self-describing CSV/JSON output.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Trajectory(a) => commands::trajectory(&a.resolve()?),
        Command::Phase(a) => commands::phase(&a.resolve()?),
        Command::Sweep(a) => commands::sweep(a),
        Command::Verify(a) => commands::verify(a),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fbphase: {e}");
            e.exit_code()
        }
    }
}
