mod args;
mod commands;
mod settings;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inconsistent inputs (exit 1).
    Usage(String),
    /// Unreadable or malformed files (exit 2).
    Io(String),
    /// Non-finite or degenerate numerics (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<xtopk::Error> for CliError {
    fn from(e: xtopk::Error) -> Self {
        let msg = e.to_string();
        if e.is_io() || matches!(e, xtopk::Error::Parse { .. }) {
            CliError::Io(msg)
        } else if e.is_numeric() {
            CliError::Numeric(msg)
        } else {
            CliError::Usage(msg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
