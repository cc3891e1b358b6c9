mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::commands::CliError;

/// Caps rayon's pool when `SIRSVP_THREADS` is a positive integer; `0` or unset means automatic.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SIRSVP_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("SIRSVP_THREADS must be a nonnegative integer, got `{value}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.into()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| commands::run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sirsvp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
