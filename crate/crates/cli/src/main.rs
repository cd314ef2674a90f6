use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use persal::cli::Cli;
use persal::commands::execute;
use persal::error::{EXIT_INVALID, EXIT_OK};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
