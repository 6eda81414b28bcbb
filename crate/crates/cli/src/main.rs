//! Command-line front end: touching points, windings, scans, dispersion
//! fits, symmetry and real-space checks, rings and field exports.

mod args;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Btps(a) => commands::btps(a),
        Command::Winding(a) => commands::winding(a),
        Command::Scan(a) => commands::scan(a),
        Command::Dispersion(a) => commands::dispersion(a),
        Command::Symmetry(a) => commands::symmetry(a),
        Command::Realspace(a) => commands::realspace(a),
        Command::Ring(a) => commands::ring(a),
        Command::FieldExport(a) => commands::field_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::BadInput(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}
