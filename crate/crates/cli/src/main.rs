//! `ssa`: decompose a series, replay a registered scenario or run a Monte
//! Carlo sweep.
//!
//! Exit status: 0 ok, 2 usage or configuration error, 3 numerical failure,
//! 4 scenario expectation missed.

mod decompose;
mod exit;
mod json;
mod montecarlo;
mod scenario;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ssa", version, about = "Singular spectrum analysis with oblique refinements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a CSV series and write components, w-correlations and a summary.
    Decompose(decompose::DecomposeArgs),
    /// Run a registered scenario and compare it with its expectations.
    Scenario(scenario::ScenarioArgs),
    /// Repeat a noisy scenario over seeds and an optional parameter grid.
    Montecarlo(montecarlo::MonteCarloArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose(a) => decompose::run(a),
        Command::Scenario(a) => scenario::run(a),
        Command::Montecarlo(a) => montecarlo::run(a),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    std::process::exit(code);
}
