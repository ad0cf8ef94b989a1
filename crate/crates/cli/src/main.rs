use std::process::ExitCode;

use clap::Parser;
use cropcurate_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(cropcurate::Error::NonFiniteLoss { .. }) = e {
                eprintln!("hint: lower the learning rate or raise the temperature");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
