mod cli;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};
use config::{RunConfig, SEED_ENV};
use error::CliError;

/// Flattens clap's multi-line message into one line, dropping the usage
/// and help hints but keeping the list of valid values.
fn clap_message(e: &clap::Error) -> String {
    let text = e.render().to_string();
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .map(|l| l.strip_prefix("error: ").unwrap_or(l))
        .collect();
    lines.join("; ")
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut flags = cli.global.set.clone();
    flags.extend(cli.command.pairs());
    if let Some(seed) = cli.global.seed {
        flags.push(("seed".into(), seed.to_string()));
    }
    let env_seed = std::env::var(SEED_ENV).ok().filter(|s| !s.trim().is_empty());
    let cfg = RunConfig::resolve(cli.global.config.as_deref(), env_seed, &flags)?;
    match cli.command {
        Command::FitStable(_) => commands::fit_stable(&cfg),
        Command::Generate(_) => commands::generate(&cfg),
        Command::Predict(_) => commands::predict(&cfg),
        Command::Eval(_) => commands::eval(&cfg),
        Command::Sparsity(_) => commands::sparsity(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(clap_message(&e));
            eprintln!("{}", err.render());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
