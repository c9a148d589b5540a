use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = fiid_cli::Cli::parse();
    match fiid_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fiid: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
