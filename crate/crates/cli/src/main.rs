//! `circlekit` command-line front end.
//!
//! Exit codes: 0 success, 1 computation flag (divergence, budget, overflow),
//! 2 usage error.

mod cache;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::Tunables;

#[derive(Parser, Debug)]
#[command(name = "circlekit", version, about = "Circle-method densities and counts at desk scale")]
pub struct Cli {
    #[command(flatten)]
    pub tunables: Tunables,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Predicted main term, optionally compared with the exact weighted count
    Predict(commands::PredictArgs),
    /// Exact von Mangoldt weighted counts for one or more N
    Count(commands::CountArgs),
    /// Local density at a single prime
    Local(commands::LocalArgs),
    /// Truncated singular series over p <= P
    Series(commands::SeriesArgs),
    /// Singular integral of the top-degree form
    SigmaInf(commands::SigmaInfArgs),
    /// Major arc dissection
    Arcs(commands::ArcsArgs),
    /// Exponential sum T(b; alpha) over a set of frequencies
    WeylScan(commands::WeylScanArgs),
    /// Weyl-differenced kernel counts and the fitted g_d
    Zcount(commands::ZcountArgs),
    /// h-invariant of a quadratic form, or a certified bound
    Hinv(commands::HinvArgs),
    /// g_M and f_M from a decomposition in echelon shape
    GmSplit(commands::GmSplitArgs),
    /// Growth exponent of the zero count of a system
    Regularity(commands::RegularityArgs),
}

pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            2
        }
        Err(Failure::Computation(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
