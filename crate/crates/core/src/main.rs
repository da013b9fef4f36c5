use std::process::ExitCode;

use clap::Parser;
use pgg::cli::{self, Cli};

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_CONFIG } else { cli::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli::run(&parsed) {
        Ok(()) => ExitCode::from(cli::EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
