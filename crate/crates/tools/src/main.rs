use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = rendezvous_tools::cli::Cli::parse();
    match rendezvous_tools::cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
