//! `histlearn`: generate workloads, train histograms from query feedback, and
//! run experiment sweeps.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use commands::CliError;

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cmd = Cli::command();
    let argv = match config::merge(std::env::args_os().collect(), &cmd) {
        Ok(a) => a,
        Err(config::ConfigError(msg)) => {
            eprintln!("error: {msg}\n\n{}", cmd.clone().render_usage());
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let cli = match cmd.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE_ERROR),
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            ExitCode::from(USAGE_ERROR)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(DATA_ERROR)
        }
    }
}
