use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::signal::{add_noise, generate, NoiseSpec, SignalSpec, SignalTerm};
use crate::error::{Result, SsaError};
use crate::pipeline::{run_pipeline, Method, PipelineOutput, PipelineSpec};
use crate::series::TimeSeries;
use crate::ssa::Grouping;

const BUILTIN: &str = include_str!("scenarios.toml");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngInfo {
    pub algorithm: String,
    pub seeding: String,
    pub normal: String,
}

/// An expected value with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Absolute tolerance around `value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs: Option<f64>,
    /// Relative tolerance around `value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    /// Compare `|metric|` instead of the signed value.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub magnitude: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Expectation {
    pub fn holds(&self, actual: f64) -> bool {
        let x = if self.magnitude { actual.abs() } else { actual };
        if !x.is_finite() {
            return false;
        }
        if let Some(v) = self.value {
            let tol = self.abs.unwrap_or(0.0).max(self.rel.map_or(0.0, |r| r * v.abs()));
            if (x - v).abs() > tol {
                return false;
            }
        }
        self.min.is_none_or(|m| x >= m) && self.max.is_none_or(|m| x <= m)
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        let subject = if self.magnitude { format!("|{}|", self.metric) } else { self.metric.clone() };
        if let Some(v) = self.value {
            match (self.abs, self.rel) {
                (Some(a), _) => parts.push(format!("{subject} = {v} ± {a}")),
                (None, Some(r)) => parts.push(format!("{subject} = {v} ± {}%", r * 100.0)),
                (None, None) => parts.push(format!("{subject} = {v}")),
            }
        }
        if let Some(m) = self.min {
            parts.push(format!("{subject} >= {m}"));
        }
        if let Some(m) = self.max {
            parts.push(format!("{subject} <= {m}"));
        }
        parts.join(", ")
    }
}

/// A named experiment: generator, pipeline parameters and expected values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub method: Method,
    pub len: usize,
    pub window: usize,
    /// Basic SSA grouping, e.g. `"1,2;3,4"`.
    pub groups: String,
    pub terms: Vec<SignalTerm>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// 1-based group indices whose cross correlations form `cross_block_max`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocks: Vec<Vec<usize>>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| SsaError::InvalidConfig(format!("override {key}: '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| SsaError::InvalidConfig(format!("override {key}: '{value}' is not an integer")))
}

impl Scenario {
    pub fn signal(&self) -> SignalSpec {
        SignalSpec::new(self.terms.clone(), self.len)
    }

    pub fn grouping(&self) -> Result<Grouping> {
        self.groups.parse()
    }

    pub fn pipeline(&self) -> Result<PipelineSpec> {
        let mut spec = PipelineSpec::new(self.window, self.grouping()?, self.method);
        if let Some(e) = self.epsilon {
            spec.epsilon = e;
        }
        if let Some(m) = self.max_iter {
            spec.max_iter = m;
        }
        spec.kappa = self.kappa;
        spec.gamma = self.gamma;
        spec.validate()?;
        Ok(spec)
    }

    /// Generated series with noise drawn from `seed`.
    pub fn series(&self) -> Result<TimeSeries> {
        let clean = generate(&self.signal())?;
        add_noise(&clean, &NoiseSpec { sigma: self.noise_sd, seed: self.seed })
    }

    /// Sets one parameter. Keys: `omegaK`, `ampK`, `phaseK`, `rateK` (1-based
    /// term), `len`, `window`, `groups`, `noise_sd`, `seed`, `epsilon`,
    /// `max_iter`, `kappa` (`none` disables), `gamma`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let term_key = ["omega", "amp", "phase", "rate"]
            .iter()
            .find_map(|p| key.strip_prefix(p).map(|rest| (*p, rest)));
        if let Some((field, idx)) = term_key {
            if let Ok(i) = idx.parse::<usize>() {
                let count = self.terms.len();
                let term = i
                    .checked_sub(1)
                    .and_then(|i| self.terms.get_mut(i))
                    .ok_or_else(|| SsaError::InvalidConfig(format!("override {key}: scenario has {count} terms")))?;
                let v = parse_f64(key, value)?;
                match field {
                    "omega" => term.frequency = v,
                    "amp" => term.amplitude = v,
                    "phase" => term.phase = v,
                    _ => term.rate = v,
                }
                return Ok(());
            }
        }
        match key {
            "len" => self.len = parse_usize(key, value)?,
            "window" => self.window = parse_usize(key, value)?,
            "groups" => self.groups = value.to_string(),
            "noise_sd" => self.noise_sd = parse_f64(key, value)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| SsaError::InvalidConfig(format!("override seed: '{value}'")))?
            }
            "epsilon" => self.epsilon = Some(parse_f64(key, value)?),
            "max_iter" => self.max_iter = Some(parse_usize(key, value)?),
            "kappa" if value.trim() == "none" => self.kappa = None,
            "kappa" => self.kappa = Some(parse_f64(key, value)?),
            "gamma" => self.gamma = Some(parse_f64(key, value)?),
            _ => return Err(SsaError::InvalidConfig(format!("unknown parameter '{key}'"))),
        }
        Ok(())
    }

    pub fn with_overrides(&self, overrides: &BTreeMap<String, String>) -> Result<Scenario> {
        let mut s = self.clone();
        for (k, v) in overrides {
            s.set(k, v)?;
        }
        s.signal().validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub schema_version: u32,
    pub rng: RngInfo,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl Registry {
    pub fn builtin() -> Registry {
        Self::parse(BUILTIN).expect("built-in scenario registry is valid")
    }

    pub fn parse(text: &str) -> Result<Registry> {
        let reg: Registry = toml::from_str(text).map_err(|e| SsaError::Parse(e.to_string()))?;
        if reg.schema_version != SCHEMA_VERSION {
            return Err(SsaError::Parse(format!(
                "unsupported registry schema version {}",
                reg.schema_version
            )));
        }
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Registry> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn source() -> &'static str {
        BUILTIN
    }

    pub fn get(&self, name: &str) -> Result<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| SsaError::UnknownScenario(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.scenarios.iter().map(|s| s.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub metric: String,
    pub expected: String,
    pub actual: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub output: PipelineOutput,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn metric(&self, name: &str) -> f64 {
        self.metrics.get(name).copied().unwrap_or(f64::NAN)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Best matching of estimates to truths when there are two of each; `err`
/// scores a single pair and the result is the worse of the matched pairs.
fn matched_max<T>(est: &[T], truth: &[T], err: impl Fn(&T, &T) -> f64) -> f64 {
    let direct = est.iter().zip(truth).map(|(a, b)| err(a, b)).fold(0.0, f64::max);
    if est.len() == 2 && truth.len() == 2 {
        let swapped = err(&est[0], &truth[1]).max(err(&est[1], &truth[0]));
        direct.min(swapped)
    } else {
        direct
    }
}

/// Scalar summary of a pipeline run on a scenario.
pub(crate) fn collect_metrics(
    scenario: &Scenario,
    out: &PipelineOutput,
) -> Result<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    if out.components.len() == 2 {
        m.insert("wcor_before".into(), out.wcor_before.get(0, 1));
        m.insert("wcor_after".into(), out.wcor_after.get(0, 1));
    }
    m.insert("tau_before".into(), mean(&out.tau_before));
    m.insert("tau_after".into(), mean(&out.tau_after));
    if let Some(v) = out.lr_wcor {
        m.insert("lr_wcor_after".into(), v);
    }
    if let Some(v) = out.f_corr {
        m.insert("f_corr_after".into(), v);
    }
    if let Some(it) = &out.iteration {
        m.insert("iterations".into(), it.iterations as f64);
        m.insert("converged".into(), if it.converged { 1.0 } else { 0.0 });
        m.insert("sigma_corrections".into(), it.sigma_corrections as f64);
    }
    if out.components.len() == scenario.terms.len() {
        let truth = scenario.signal().term_series()?;
        m.insert(
            "max_abs_error".into(),
            matched_max(&out.components, &truth, |a, b| a.max_abs_diff(b)),
        );
        let freqs: Vec<f64> = scenario.terms.iter().map(|t| t.frequency).collect();
        m.insert(
            "freq_error".into(),
            matched_max(&out.group_frequency, &freqs, |a, b| (a - b).abs()),
        );
    }
    if scenario.blocks.len() == 2 {
        let to_zero = |b: &Vec<usize>| b.iter().map(|i| i - 1).collect::<Vec<_>>();
        let (a, b) = (to_zero(&scenario.blocks[0]), to_zero(&scenario.blocks[1]));
        let count = out.wcor_after.len();
        if let Some(&bad) = a.iter().chain(&b).find(|&&i| i >= count) {
            return Err(SsaError::IndexOutOfRange { index: bad + 1, count });
        }
        m.insert("cross_block_max".into(), out.wcor_after.max_abs_between(&a, &b));
    }
    Ok(m)
}

/// Runs a resolved scenario and evaluates its expectations.
pub fn run_scenario_with(scenario: &Scenario) -> Result<ScenarioReport> {
    let series = scenario.series()?;
    let output = run_pipeline(&series, &scenario.pipeline()?)?;
    let metrics = collect_metrics(scenario, &output)?;
    let checks = scenario
        .expect
        .iter()
        .map(|e| {
            let actual = metrics.get(&e.metric).copied().unwrap_or(f64::NAN);
            Check {
                metric: e.metric.clone(),
                expected: e.describe(),
                actual,
                passed: e.holds(actual),
                note: e.note.clone(),
            }
        })
        .collect();
    Ok(ScenarioReport {
        scenario: scenario.clone(),
        output,
        metrics,
        checks,
    })
}

/// Looks up a built-in scenario, applies overrides and runs it.
pub fn run_scenario(name: &str, overrides: &BTreeMap<String, String>) -> Result<ScenarioReport> {
    let registry = Registry::builtin();
    let scenario = registry.get(name)?.with_overrides(overrides)?;
    run_scenario_with(&scenario)
}
