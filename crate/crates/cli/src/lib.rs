//! Command-line front end for the embedding fusion toolkit: load and
//! validate embedding files, run the alignment/averaging pipelines, and emit
//! stability/benchmark reports plus a manifest per run.

pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod reports;

use clap::Parser;

/// Parse arguments, dispatch, and map failures to exit codes:
/// 0 success, 1 validation/usage, 2 I/O, 3 oracle-assertion failure.
pub fn run() -> i32 {
    let parsed = match cli::Cli::try_parse() {
        Ok(parsed) => parsed,
        Err(e) => {
            // Help and version are successful exits; everything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(parsed) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
