use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bcreg_cli::Cli::parse();
    match bcreg_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
