//! `confseq`: intervals, simulation tables and the maximal-inequality check
//! from the command line.
//!
//! Exit codes: 0 on success, 2 when arguments fail validation, 1 on
//! numerical or I/O failure.

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn numeric(e: confseq::Error) -> Self {
        CliError::failure(e.to_string())
    }

    /// Invalid plans are argument problems; everything else is numerical.
    pub fn from_core(e: confseq::Error) -> Self {
        match e {
            confseq::Error::InvalidPlan(_) | confseq::Error::InvalidParameter { .. } => CliError::usage(e.to_string()),
            other => CliError::numeric(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match config::resolve_command(cli)? {
        Command::Interval(a) => commands::interval(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::ReproduceTable(a) => commands::reproduce(a),
        Command::VilleCheck(a) => commands::ville(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
