use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use tmsv_ppt_cli::config::{resolve, CliError, RawOptions};
use tmsv_ppt_cli::scenario::run_scenario;

fn main() -> ExitCode {
    let raw = match RawOptions::try_parse() {
        Ok(raw) => raw,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match resolve(raw).and_then(|config| run_scenario(&config).map(|()| config)) {
        Ok(config) => {
            println!("wrote scenario outputs to {}", config.out.display());
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Run(message)) => {
            eprintln!("numerical failure: {message}");
            ExitCode::from(2)
        }
    }
}
