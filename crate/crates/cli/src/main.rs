mod args;
mod config;
mod eval;
mod fit;
mod gen;
mod hopfield;
mod metrics;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;

/// Bad input from the user: a method/model mismatch, a malformed config file.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Whether every check passed; commands other than `verify` always pass.
type Outcome = anyhow::Result<bool>;

fn run(cli: Cli) -> Outcome {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(cmd) => gen::run(cmd, cli.seed, &cli.out).map(|_| true),
        Command::Fit(a) => fit::run(&a, &cfg, cli.seed, &cli.out).map(|_| true),
        Command::Eval(a) => eval::run(&a, cli.seed, &cli.out).map(|_| true),
        Command::Hopfield(cmd) => hopfield::run(cmd, cli.seed, &cli.out).map(|_| true),
        Command::Verify(a) => verify::run(&a, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
