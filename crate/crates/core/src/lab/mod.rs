//! Simulated signals, the scenario registry and the Monte Carlo harness.

mod montecarlo;
mod scenario;
mod signal;

pub use montecarlo::{monte_carlo, winsorize, winsorized_mean, GridPoint, MonteCarloSummary, Sweep};
pub use scenario::{
    run_scenario, run_scenario_with, Check, Expectation, Registry, RngInfo, Scenario, ScenarioReport,
};
pub use signal::{add_noise, add_noise_with, generate, replicate_rng, NoiseSpec, SignalSpec, SignalTerm};
