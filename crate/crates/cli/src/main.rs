//! `evasim` command-line interface.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 infeasible
//! scenario, 4 I/O error.

mod commands;

use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("evasim: {err}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
