//! Configuration-driven experiments over the `fastslow` kernels.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod error;
mod commands;
mod output;
mod svg;

pub use config::{load_config, parse_config, Config};
pub use error::{CliError, CliResult};
pub use output::{Artifact, Manifest};

use config::Arity;

#[derive(Debug, Parser)]
#[command(name = "fastslow", version, about = "Simulation and large-deviation experiments for fast-slow systems")]
pub struct Cli {
    /// Worker threads for ensemble runs (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    pub config: PathBuf,

    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Second-order ensembles with deviation statistics against the averaged path.
    Simulate(RunArgs),
    /// Averaged ODE path.
    Averaged(RunArgs),
    /// Stationary density of the frozen fast process.
    Invariant(RunArgs),
    /// Occupation measure of one fast path against its stationary law.
    Occupation(RunArgs),
    /// Per-time KDE of an ensemble with the averaged path overlaid.
    Heatmap(RunArgs),
    /// Path rate of a candidate pair.
    RateEval(RunArgs),
    /// Monte Carlo tail-rate ladder.
    TailRate(RunArgs),
    /// Shared-noise coupling of the second-order system with its reduction.
    CoupleScan(RunArgs),
    /// Integration-by-parts identity for a deterministic weight.
    LemmaCheck(RunArgs),
}

impl CliCommand {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            CliCommand::Simulate(a) => (Command::Simulate, a),
            CliCommand::Averaged(a) => (Command::Averaged, a),
            CliCommand::Invariant(a) => (Command::Invariant, a),
            CliCommand::Occupation(a) => (Command::Occupation, a),
            CliCommand::Heatmap(a) => (Command::Heatmap, a),
            CliCommand::RateEval(a) => (Command::RateEval, a),
            CliCommand::TailRate(a) => (Command::TailRate, a),
            CliCommand::CoupleScan(a) => (Command::CoupleScan, a),
            CliCommand::LemmaCheck(a) => (Command::LemmaCheck, a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Averaged,
    Invariant,
    Occupation,
    Heatmap,
    RateEval,
    TailRate,
    CoupleScan,
    LemmaCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Averaged => "averaged",
            Command::Invariant => "invariant",
            Command::Occupation => "occupation",
            Command::Heatmap => "heatmap",
            Command::RateEval => "rate-eval",
            Command::TailRate => "tail-rate",
            Command::CoupleScan => "couple-scan",
            Command::LemmaCheck => "lemma-check",
        }
    }

    fn epsilon_arity(self) -> Arity {
        match self {
            Command::Averaged | Command::Invariant | Command::RateEval | Command::LemmaCheck => Arity::None,
            Command::Occupation | Command::Heatmap => Arity::One,
            Command::Simulate | Command::TailRate | Command::CoupleScan => Arity::Many,
        }
    }

    fn uses_paths(self) -> bool {
        matches!(self, Command::Simulate | Command::Heatmap | Command::TailRate | Command::CoupleScan)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs one command and returns the output directory.
pub fn run(cli: &Cli) -> CliResult<PathBuf> {
    let (command, args) = cli.command.split();
    let (config, raw) = load_config(&args.config)?;
    let out_dir = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let validated = config.validate(command)?;
    let execute = || commands::execute(command, &validated, &raw, &out_dir);
    match cli.threads {
        Some(0) => Err(CliError::config("--threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config("--threads", e.to_string()))?
            .install(execute),
        None => execute(),
    }?;
    Ok(out_dir)
}
