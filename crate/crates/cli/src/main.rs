use std::process::ExitCode;

use clap::Parser;
use pudsim_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::validation(e.to_string().trim_end());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            log::info!(
                "{} files written to {}",
                outcome.manifest.files.len() + 1,
                cli.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
