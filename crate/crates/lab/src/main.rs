use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use kcost_lab::{execute, Cli, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match execute(&cli) {
        Ok((path, report, code)) => {
            let verdict = match report.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "done",
            };
            println!("{verdict}: {}", path.display());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
