//! Command-line front end of regfolio: CSV ingestion, configuration, and the
//! `estimate`, `simulate` and `backtest` commands.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod run;

use std::ffi::OsString;

use clap::Parser;

pub use config::{Args, Command, RunConfig};
pub use error::{CliError, Result};
pub use ingest::{ingest_csv, ingest_csv_with, IngestOptions};
pub use run::{run, RunSummary};

/// Parses arguments, runs, and returns the process exit code. Fatal errors are
/// reported on stderr as one JSON record.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => return fail(&CliError::Config(e.to_string().trim().to_string())),
    };
    let outcome = RunConfig::from_args(&args).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            0
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> i32 {
    let record = serde_json::to_string(&e.record())
        .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.kind()));
    eprintln!("{record}");
    match e {
        CliError::Core(_) => 1,
        _ => 2,
    }
}
