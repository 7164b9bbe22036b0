use std::process::ExitCode;

use clap::Parser;
use modwave_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("modwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
