//! Command-line front end: each subcommand runs one experiment family and
//! writes [`ExperimentRecord`](rtcouple::ExperimentRecord) rows as CSV or
//! JSON.
//!
//! Exit codes: 0 on success, 1 when a check is violated, 2 on a usage or
//! configuration error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::Outcome;
pub use config::{ExperimentConfig, Format};

#[derive(Debug, Parser)]
#[command(name = "rtcouple", version, about = "Split-merge chain and coupling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact distance to stationarity d(t) and the mixing time.
    ExactTv(ExperimentConfig),
    /// Exhaustive soundness checks of the neighbor coupling.
    VerifyCoupling(ExperimentConfig),
    /// Exhaustive checks of the one-step growth and shrink bounds.
    LemmaGrid(ExperimentConfig),
    /// Mean of s(X_t, Y_t) and the meeting fraction over time.
    Meeting(ExperimentConfig),
    /// PD(1) comparison, giant component, and the growth probabilities.
    Schramm(ExperimentConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ExactTv(_) => "exact-tv",
            Command::VerifyCoupling(_) => "verify-coupling",
            Command::LemmaGrid(_) => "lemma-grid",
            Command::Meeting(_) => "meeting",
            Command::Schramm(_) => "schramm",
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        match self {
            Command::ExactTv(c)
            | Command::VerifyCoupling(c)
            | Command::LemmaGrid(c)
            | Command::Meeting(c)
            | Command::Schramm(c) => c,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] rtcouple::Error),
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(rtcouple::Error::NonMonotone(_)) => 1,
            _ => 2,
        }
    }
}

/// Runs `command` with an already resolved configuration.
pub fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let go = || match command {
        Command::ExactTv(_) => commands::exact_tv(cfg),
        Command::VerifyCoupling(_) => commands::verify_coupling(cfg),
        Command::LemmaGrid(_) => commands::lemma_grid(cfg),
        Command::Meeting(_) => commands::meeting(cfg),
        Command::Schramm(_) => commands::schramm(cfg),
    };
    match cfg.threads {
        None => go(),
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(go),
    }
}

fn run_parsed(cli: Cli) -> Result<usize, CliError> {
    let cfg = cli.command.config().clone().resolve()?;
    let outcome = execute(&cli.command, &cfg)?;
    let bytes = output::render(&outcome.records, cfg.format(), cli.command.name())?;
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(outcome.violations)
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_parsed(cli) {
        Ok(0) => 0,
        Ok(v) => {
            eprintln!("{v} violation(s); see the violation rows in the output");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
