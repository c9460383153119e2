use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use ssa_core::io::format_f64;
use ssa_core::lab::{monte_carlo, GridPoint, Sweep};

use crate::exit::{CmdResult, Failure, OK};
use crate::scenario::{load_registry, parse_overrides};

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    /// Base scenario from the registry.
    #[arg(long)]
    pub scenario: String,
    /// `key=start:stop:step` or `key=v1,v2,...`; omit for a single point.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated sweep values to skip.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<f64>,
    /// Fraction clamped at each tail before averaging.
    #[arg(long, default_value_t = 0.05)]
    pub winsorize: f64,
    /// Override a scenario field (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Metrics whose square root is reported as an RMSE column.
const SQUARED: &[(&str, &str)] = &[
    ("sq_err", "rmse"),
    ("sq_err_omega1", "rmse_omega1"),
    ("sq_err_omega2", "rmse_omega2"),
];

fn write_grid<W: Write>(w: W, key: Option<&str>, grid: &[GridPoint]) -> Result<(), Failure> {
    let metrics: BTreeSet<&str> = grid.iter().flat_map(|g| g.metrics.keys().map(String::as_str)).collect();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = key.into_iter().map(str::to_string).collect();
    header.extend(["replicates".to_string(), "failures".to_string()]);
    header.extend(SQUARED.iter().filter(|(m, _)| metrics.contains(m)).map(|(_, r)| r.to_string()));
    header.extend(metrics.iter().map(|m| m.to_string()));
    out.write_record(&header)?;

    for g in grid {
        let replicates = g.metrics.values().map(|s| s.replicates).max().unwrap_or(0) + g.failures;
        let mut row: Vec<String> = key.map(|k| format_f64(g.params[k])).into_iter().collect();
        row.push(replicates.to_string());
        row.push(g.failures.to_string());
        for (m, _) in SQUARED.iter().filter(|(m, _)| metrics.contains(m)) {
            row.push(format_f64(g.rmse(m)));
        }
        for m in &metrics {
            row.push(g.metrics.get(*m).map_or_else(String::new, |s| format_f64(s.winsorized_mean)));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn run(args: &MonteCarloArgs) -> CmdResult {
    let registry = load_registry(args.registry.as_ref())?;
    let scenario = registry.get(&args.scenario)?.with_overrides(&parse_overrides(&args.overrides)?)?;
    let sweep = match &args.sweep {
        Some(s) => {
            let sweep = s.parse::<Sweep>()?.exclude(&args.exclude);
            if sweep.values.is_empty() {
                return Err(Failure::usage("InvalidConfig: every sweep value was excluded"));
            }
            Some(sweep)
        }
        None => None,
    };
    if let Some(s) = &sweep {
        // reject unknown keys before spending time on replicates
        scenario.clone().set(&s.key, &s.values[0].to_string())?;
    }
    let grid = monte_carlo(&scenario, args.reps, args.seed, sweep.as_ref(), args.winsorize)?;
    let key = sweep.as_ref().map(|s| s.key.as_str());
    match &args.out {
        Some(path) => write_grid(std::fs::File::create(path)?, key, &grid)?,
        None => write_grid(std::io::stdout().lock(), key, &grid)?,
    }
    Ok(OK)
}
