use std::process::ExitCode;

use clap::Parser;
use stov_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("stovlab: {e}");
            ExitCode::FAILURE
        }
    }
}
