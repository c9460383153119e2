use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use serde_json::{json, Value};

use ssa_core::diagnostics::CorrelationMatrix;
use ssa_core::io::{format_f64, read_series_file};
use ssa_core::pipeline::{run_pipeline, Method, PipelineOutput, PipelineSpec};
use ssa_core::{Grouping, SsaError};

use crate::exit::{CmdResult, Failure, NUMERICAL, OK};
use crate::json;

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Single-column CSV series, optional header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Window length L, 1 < L < N.
    #[arg(long)]
    pub window: Option<usize>,
    /// basic, iossa or deriv.
    #[arg(long)]
    pub method: Option<Method>,
    /// Basic SSA groups, e.g. "1,2;3,4" (1-based, ranges with '-').
    #[arg(long)]
    pub groups: Option<String>,
    /// Iterative O-SSA stopping tolerance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Iterative O-SSA iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Sigma-correction threshold, > 1 (iossa only).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Derivative weight (deriv only).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// JSON file with any of the above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print a text heat map of the final w-correlation matrix.
    #[arg(long)]
    pub heatmap: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    window: Option<usize>,
    method: Option<Method>,
    groups: Option<String>,
    epsilon: Option<f64>,
    max_iter: Option<usize>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    out: Option<PathBuf>,
}

struct Resolved {
    input: PathBuf,
    out: PathBuf,
    spec: PipelineSpec,
}

fn resolve(args: &DecomposeArgs) -> Result<Resolved, Failure> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let missing = |what: &str| Failure::usage(format!("InvalidConfig: --{what} is required"));
    let input = args.input.clone().or(file.input).ok_or_else(|| missing("input"))?;
    let window = args.window.or(file.window).ok_or_else(|| missing("window"))?;
    let groups = args.groups.clone().or(file.groups).ok_or_else(|| missing("groups"))?;
    let groups: Grouping = groups.parse()?;
    let method = args.method.or(file.method).unwrap_or(Method::Basic);

    let mut spec = PipelineSpec::new(window, groups, method);
    if let Some(eps) = args.epsilon.or(file.epsilon) {
        spec.epsilon = eps;
    }
    if let Some(m) = args.max_iter.or(file.max_iter) {
        spec.max_iter = m;
    }
    spec.kappa = args.kappa.or(file.kappa);
    spec.gamma = args.gamma.or(file.gamma);
    spec.validate()?;
    Ok(Resolved {
        input,
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        spec,
    })
}

fn params(r: &Resolved, len: usize) -> Value {
    json!({
        "input": r.input.display().to_string(),
        "length": len,
        "window": r.spec.window,
        "groups": r.spec.groups.to_string(),
        "epsilon": r.spec.epsilon,
        "max_iter": r.spec.max_iter,
        "kappa": r.spec.kappa,
        "gamma": r.spec.gamma,
    })
}

fn matrix_rows(m: &CorrelationMatrix) -> Vec<Vec<f64>> {
    (0..m.len()).map(|i| (0..m.len()).map(|j| m.get(i, j)).collect()).collect()
}

fn diagnostics(out: &PipelineOutput) -> Value {
    let it = out.iteration.as_ref();
    json!({
        "labels": out.wcor_after.labels(),
        "wcor_before": matrix_rows(&out.wcor_before),
        "wcor_after": matrix_rows(&out.wcor_after),
        "lr_wcor": out.lr_wcor,
        "f_corr": out.f_corr,
        "tau_before": out.tau_before,
        "tau": out.tau_after,
        "iterations": it.map(|i| i.iterations),
        "converged": it.map(|i| i.converged),
        "sigma_corrections": it.map(|i| i.sigma_corrections),
        "history": it.map(|i| i.history.clone()),
        "frequencies": out.frequencies,
        "group_frequency": out.group_frequency,
    })
}

fn write_components(path: &Path, out: &PipelineOutput) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=out.components.len()).map(|i| format!("component_{i}")).collect();
    header.push("residual".into());
    w.write_record(&header)?;
    for n in 0..out.residual.len() {
        let mut row: Vec<String> = out.components.iter().map(|c| format_f64(c.values()[n])).collect();
        row.push(format_f64(out.residual.values()[n]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_correlations(path: &Path, m: &CorrelationMatrix) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![String::new()];
    header.extend(m.labels().iter().cloned());
    w.write_record(&header)?;
    for i in 0..m.len() {
        let mut row = vec![m.labels()[i].clone()];
        row.extend((0..m.len()).map(|j| format_f64(m.get(i, j))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn error_value(e: &SsaError) -> Value {
    json!({ "kind": e.kind(), "message": e.to_string() })
}

pub fn run(args: &DecomposeArgs) -> CmdResult {
    let r = resolve(args)?;
    let input = read_series_file(&r.input)?;
    let series = input.series;
    fs::create_dir_all(&r.out)?;
    let summary_path = r.out.join("summary.json");

    let out = match run_pipeline(&series, &r.spec) {
        Ok(out) => out,
        Err(e) if e.is_usage_error() => return Err(e.into()),
        Err(e) => {
            let summary = json!({
                "schema_version": json::SCHEMA_VERSION,
                "method": r.spec.method.to_string(),
                "params": params(&r, series.len()),
                "error": error_value(&e),
            });
            json::write_file(&summary_path, &summary)?;
            eprintln!("error: {e}");
            return Ok(NUMERICAL);
        }
    };

    write_components(&r.out.join("components.csv"), &out)?;
    write_correlations(&r.out.join("wcor.csv"), &out.wcor_after)?;
    write_correlations(&r.out.join("wcor_before.csv"), &out.wcor_before)?;
    let summary = json!({
        "schema_version": json::SCHEMA_VERSION,
        "method": r.spec.method.to_string(),
        "params": params(&r, series.len()),
        "diagnostics": diagnostics(&out),
    });
    json::write_file(&summary_path, &summary)?;
    if args.heatmap {
        let map = out.wcor_after.heat_map();
        fs::write(r.out.join("wcor_heatmap.txt"), &map)?;
        print!("{map}");
    }
    Ok(OK)
}
