mod args;
mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// Failure with its exit status: 1 for usage errors, 2 for data and
/// validation errors.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    /// Results already produced, still written to standard output.
    pub output: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            message: message.into(),
            output: String::new(),
        }
    }

    pub fn data(message: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            message: message.into(),
            output: String::new(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let (out, status) = match commands::run(cli) {
        Ok(out) => (out, ExitCode::SUCCESS),
        Err(e) => {
            eprintln!("error: {}", e.message);
            (e.output, ExitCode::from(e.code))
        }
    };
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(2);
    }
    status
}
