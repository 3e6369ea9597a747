//! Experiment front end for `kcost-core`: argument parsing, orchestration,
//! and JSON/CSV report emission.
//!
//! Exit codes: 0 when the run passes (or certifies nothing), 2 when a
//! certificate fails, 1 on usage or input errors.

pub mod cli;
pub mod commands;
pub mod report;

use std::path::PathBuf;

use anyhow::Result;

pub use cli::Cli;
pub use report::{emit_report, Report};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CERT_FAIL: u8 = 2;

/// Runs the command, writes its report, and returns the report path and the
/// exit code it maps to.
pub fn execute(cli: &Cli) -> Result<(PathBuf, Report, u8)> {
    let report = commands::run(cli)?;
    let path = emit_report(&cli.out, commands::report_name(&cli.command), &report)?;
    let code = if report.pass == Some(false) { EXIT_CERT_FAIL } else { EXIT_PASS };
    Ok((path, report, code))
}
