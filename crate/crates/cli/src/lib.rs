//! Command-line driver for the `dicke-ising` solvers.
//!
//! Exit codes: 0 on success, 1 on a numerical or I/O failure, 2 on a
//! usage or configuration error.

use std::ffi::OsString;

use clap::Parser;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, RunError};
pub use config::{resolve, Cli, RunConfig, UsageError};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[cfg(feature = "parallel")]
fn configure_threads(n: usize) -> Result<(), UsageError> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(format!("cannot configure {n} threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_: usize) -> Result<(), UsageError> {
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match resolve(cli).and_then(|c| configure_threads(c.threads).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match run(&cfg) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
