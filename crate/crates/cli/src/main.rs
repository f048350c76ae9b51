use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use histolab::error::EXIT_USAGE;
use histolab::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match histolab::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("histolab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
