use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use ssa_core::lab::{run_scenario_with, Registry};

use crate::decompose::write_correlations;
use crate::exit::{CmdResult, Failure, MISS, OK};
use crate::json;

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario name, or `list` to print the registry.
    pub name: String,
    /// Override a scenario field, e.g. `--set omega1=0.07` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// TOML registry to use instead of the built-in one.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Output directory for report.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, String>, Failure> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Failure::usage(format!("InvalidConfig: override '{s}' is not KEY=VALUE")))
        })
        .collect()
}

pub fn load_registry(path: Option<&PathBuf>) -> Result<Registry, Failure> {
    Ok(match path {
        Some(p) => Registry::load(p)?,
        None => Registry::builtin(),
    })
}

pub fn run(args: &ScenarioArgs) -> CmdResult {
    let registry = load_registry(args.registry.as_ref())?;
    if args.name == "list" {
        for s in &registry.scenarios {
            println!("{:<24} {:<6} {}", s.name, s.method.to_string(), s.description);
        }
        return Ok(OK);
    }
    let scenario = registry.get(&args.name)?.with_overrides(&parse_overrides(&args.overrides)?)?;
    let report = run_scenario_with(&scenario)?;

    fs::create_dir_all(&args.out)?;
    let doc = json!({
        "schema_version": json::SCHEMA_VERSION,
        "scenario": report.scenario,
        "rng": registry.rng,
        "metrics": report.metrics,
        "checks": report.checks,
        "passed": report.passed(),
    });
    json::write_file(&args.out.join("report.json"), &doc)?;
    write_correlations(&args.out.join("wcor.csv"), &report.output.wcor_after)?;
    for c in &report.checks {
        let status = if c.passed { "pass" } else { "MISS" };
        println!("{status:<4} {:<16} {:>12.6e}  expected {}", c.metric, c.actual, c.expected);
    }
    Ok(if report.passed() { OK } else { MISS })
}
