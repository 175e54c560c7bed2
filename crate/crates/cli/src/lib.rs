//! Command-line front end: `generate`, `decompose` and `evaluate`.
//!
//! Exit codes: 0 success, 2 invalid arguments or mismatched inputs, 3 I/O
//! failure, 4 numerical divergence. Arguments are validated before anything
//! is read or written, and an output directory left incomplete by a failure
//! carries a `FAILED` marker file.

pub mod args;
pub mod commands;
pub mod error;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{replay_argv, run, FAILED_MARKER};
pub use error::CliError;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write) -> u8
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
    match run(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
