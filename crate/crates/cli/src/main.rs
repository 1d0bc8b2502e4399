//! `patprob`: exact pattern-occurrence probabilities from the command line.
//!
//! Exit codes: 0 on success (and when a checked property holds), 1 when a
//! checked property fails, 2 on usage errors.

mod commands;
mod render;

use std::io;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::render::Format;

#[derive(Parser, Debug)]
#[command(
    name = "patprob",
    version,
    about = "Probability of finding a fixed pattern in random words"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "json")]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Bifix indicator, jump-target word and expected waiting time of a pattern.
    Bifix(commands::BifixArgs),
    /// Table of p_k and P_k by a chosen method.
    Prob(commands::ProbArgs),
    /// Compare two ordered bifix indicators or jump-target words.
    Compare(commands::CompareArgs),
    /// Group all words of length n by bifix indicator.
    Census(commands::CensusArgs),
    /// Reproduce the non-affine counterexample at k = 12.
    Counterexample,
    /// Seeded Monte Carlo estimate of P_k.
    Simulate(commands::SimulateArgs),
    /// Check the reach-table properties of a chain.
    Lemmas(commands::LemmasArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bifix(_) => "bifix",
            Command::Prob(_) => "prob",
            Command::Compare(_) => "compare",
            Command::Census(_) => "census",
            Command::Counterexample => "counterexample",
            Command::Simulate(_) => "simulate",
            Command::Lemmas(_) => "lemmas",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let rendered = match commands::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let params = serde_json::to_value(&cli.command).unwrap_or_default();
    if let Err(e) = render::emit(
        &mut io::stdout().lock(),
        cli.format,
        cli.command.name(),
        &params,
        &rendered,
    ) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if rendered.holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
