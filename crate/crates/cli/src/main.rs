//! `lighttail` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error or infeasible parameters, 3 numerical
//! accuracy failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use config::{RawConfig, SEED_ENV};

#[derive(Parser)]
#[command(name = "lighttail", version, about = "Tail probabilities of sums of light-tailed random variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form n-fold tail asymptote (and the saddle split for n = 2).
    Asym(RawConfig),
    /// Incomplete-gamma lower and upper bounds.
    Bounds(RawConfig),
    /// Monte Carlo estimate (--method crude|is|cond|ak).
    Estimate(RawConfig),
    /// Compound Poisson tail (--method esscher|logasym).
    Compound(RawConfig),
    /// Quadrature reference value for n <= 4.
    Oracle(RawConfig),
    /// Every applicable method side by side over an x-grid.
    Compare(RawConfig),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Accuracy(String),
}

impl From<lighttail::Error> for CliError {
    fn from(e: lighttail::Error) -> Self {
        match e {
            lighttail::Error::Accuracy { .. } | lighttail::Error::Envelope(_) => CliError::Accuracy(e.to_string()),
            other => CliError::Usage(format!("infeasible parameters: {other}")),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Accuracy(_) => 3,
        }
    }
}

type Runner = fn(&config::CliConfig) -> Result<output::Output, CliError>;

fn run(cli: Cli) -> Result<String, CliError> {
    let seed_env = std::env::var(SEED_ENV).ok();
    let (raw, exec): (RawConfig, Runner) = match cli.command {
        Command::Asym(r) => (r, commands::asym),
        Command::Bounds(r) => (r, commands::bounds),
        Command::Estimate(r) => (r, commands::estimate),
        Command::Compound(r) => (r, commands::compound),
        Command::Oracle(r) => (r, commands::oracle),
        Command::Compare(r) => (r, commands::compare),
    };
    let cfg = raw.resolve(seed_env)?;
    Ok(exec(&cfg)?.render(&cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.kind() == ErrorKind::UnknownArgument {
                // list the flags the subcommand does accept
                let mut cmd = Cli::command();
                if let Some(mut sub) = std::env::args().nth(1).and_then(|name| cmd.find_subcommand_mut(name).cloned()) {
                    eprintln!("\n{}", sub.render_help());
                }
            }
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Accuracy(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
