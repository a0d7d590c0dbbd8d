use std::process::ExitCode;

use clap::Parser;
use nirfuse_cli::{retain_heap, run, Cli};

fn main() -> ExitCode {
    retain_heap();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
