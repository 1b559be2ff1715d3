use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cdma_harness::cli::Cli::parse();
    match cdma_harness::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
