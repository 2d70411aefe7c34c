//! `mccwe`: generate markets, run the pricing mechanisms, check equilibria
//! and compare against exact optima.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mccwe_core::equilibria::VerifyMode;
use mccwe_core::mechanisms::Mechanism;
use mccwe_core::rational::parse_rat;
use mccwe_core::Rat;

#[derive(Parser, Debug)]
#[command(
    name = "mccwe",
    version,
    about = "Market-clearing combinatorial Walrasian equilibria toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn rational(text: &str) -> Result<Rat, String> {
    parse_rat(text)
}

fn mechanism(text: &str) -> Result<Mechanism, String> {
    text.parse().map_err(|e: mccwe_core::Error| e.to_string())
}

fn mode(text: &str) -> Result<VerifyMode, String> {
    match text {
        "we" => Ok(VerifyMode::We),
        "cwe" => Ok(VerifyMode::Cwe),
        "mccwe" => Ok(VerifyMode::Mccwe),
        other => Err(format!(
            "unknown mode {other:?} (expected we, cwe or mccwe)"
        )),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a built-in or seeded random instance.
    Gen {
        family: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = rational)]
        eps: Option<Rat>,
        #[arg(long = "bigR", value_parser = rational)]
        big_r: Option<Rat>,
        #[arg(long)]
        identical_budgets: bool,
        /// Comma-separated item values (partition_reduction).
        #[arg(long, value_delimiter = ',', value_parser = rational)]
        values: Option<Vec<Rat>>,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Run a mechanism and write its outcome.
    Solve {
        #[arg(value_parser = mechanism)]
        mechanism: Mechanism,
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Starting allocation (uba, cleanup) or bundling (fullsurplus).
        #[arg(long)]
        alloc: Option<PathBuf>,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check an outcome for equilibrium conditions.
    Verify {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(short = 'a', long = "outcome")]
        outcome: PathBuf,
        #[arg(long, value_parser = mode)]
        mode: VerifyMode,
        #[arg(long)]
        json: bool,
    },
    /// Exact optimum, best MC-CWE welfare and item-pricing bounds.
    Oracle {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        best_mccwe: bool,
        #[arg(long)]
        item_pricing: bool,
    },
    /// Fractional, integral and best MC-CWE welfare side by side.
    Gap {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
    },
    /// Approximation ratios of a mechanism over a random family.
    Bench {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Defaults to the mechanism designed for the family.
        #[arg(long, value_parser = mechanism)]
        mechanism: Option<Mechanism>,
        #[arg(long)]
        identical_budgets: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
