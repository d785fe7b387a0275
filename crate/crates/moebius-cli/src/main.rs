mod args;
mod commands;
mod output;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use moebius::Error;

use crate::args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // usage errors count as precondition violations
            let msg = e.to_string();
            let reason: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let err = Error::Precondition(reason.join(" ").trim_start_matches("error: ").to_string());
            eprintln!("{}", output::error_line(&err));
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", output::error_line(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> moebius::Result<()> {
    let out = commands::run(&cli.command, &cli.global)?;
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    output::write(&mut lock, &cli.command, &cli.global, &out)?;
    lock.flush()?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
