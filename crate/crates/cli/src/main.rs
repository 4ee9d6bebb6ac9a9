//! `spikesel` command-line tool.
//!
//! Exit codes: 0 success, 1 internal or numerical failure, 2 bad input.

mod args;
mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<spikesel::Error> for CliError {
    fn from(e: spikesel::Error) -> Self {
        if e.is_input_error() {
            Self::input(e.to_string())
        } else {
            Self::internal(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    }
    let prov = output::Provenance::from_env();
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a, &prov),
        Command::Infer(a) => commands::cmd_infer(a, &prov),
        Command::Simulate(e) => commands::cmd_simulate(e, &prov),
        Command::Evaluate(a) => commands::cmd_evaluate(a, &prov),
        Command::Calibrate(a) => commands::cmd_calibrate(a, &prov),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
