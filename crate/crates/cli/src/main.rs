//! `nniqs`: simulate Schwinger-model phase diagrams, build datasets, train
//! and apply the implicit up-scaling network, and score it against the
//! classical interpolators.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use nniqs_core::Error;

use crate::args::Cli;

/// Process exit codes.
pub mod exit {
    pub const USAGE: u8 = 2;
    pub const INVALID: u8 = 3;
    pub const IO: u8 = 4;
    pub const FORMAT: u8 = 5;
    pub const NUMERICAL: u8 = 6;
}

fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::InvalidParameter(_) => ("invalid-parameter", exit::INVALID),
        Error::ShapeMismatch(_) => ("shape-mismatch", exit::INVALID),
        Error::DegenerateNormalization => ("degenerate-normalization", exit::INVALID),
        Error::Saturated(_) => ("saturated", exit::INVALID),
        Error::DegenerateCell(_) => ("degenerate-cell", exit::INVALID),
        Error::OutsideHull(..) => ("outside-hull", exit::INVALID),
        Error::Empty(_) => ("empty", exit::INVALID),
        Error::Io { .. } => ("io", exit::IO),
        Error::Format(_) | Error::Csv(_) | Error::Json(_) => ("format", exit::FORMAT),
        Error::NoConvergence { .. } => ("no-convergence", exit::NUMERICAL),
        Error::NonFinite { .. } => ("non-finite", exit::NUMERICAL),
        Error::IntegrandGuard(_) => ("integrand-guard", exit::NUMERICAL),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=usage code={} message={:?}", exit::USAGE, first);
            return ExitCode::from(exit::USAGE);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = classify(&e);
            eprintln!("error kind={kind} code={code} message={:?}", e.to_string());
            ExitCode::from(code)
        }
    }
}
