use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;

use super::scenario::{collect_metrics, Scenario};
use super::signal::{add_noise_with, generate, replicate_rng};
use crate::error::{Result, SsaError};
use crate::pipeline::run_pipeline;

/// Clamps the lowest and highest `floor(fraction · n)` values to their
/// nearest retained neighbours.
pub fn winsorize(values: &[f64], fraction: f64) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = ((fraction * n as f64).floor() as usize).min((n - 1) / 2);
    let (lo, hi) = (sorted[k], sorted[n - 1 - k]);
    values.iter().map(|v| v.clamp(lo, hi)).collect()
}

pub fn winsorized_mean(values: &[f64], fraction: f64) -> f64 {
    let w = winsorize(values, fraction);
    w.iter().sum::<f64>() / w.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub replicates: usize,
    pub per_replicate: Vec<f64>,
    pub winsorized_mean: f64,
    pub winsorize_fraction: f64,
}

impl MonteCarloSummary {
    pub fn new(per_replicate: Vec<f64>, winsorize_fraction: f64) -> Self {
        let winsorized_mean = if per_replicate.is_empty() {
            f64::NAN
        } else {
            winsorized_mean(&per_replicate, winsorize_fraction)
        };
        Self {
            replicates: per_replicate.len(),
            per_replicate,
            winsorized_mean,
            winsorize_fraction,
        }
    }
}

/// One parameter swept over a list of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Drops grid values within `1e-9` of any excluded value.
    pub fn exclude(mut self, excluded: &[f64]) -> Self {
        self.values.retain(|v| excluded.iter().all(|e| (v - e).abs() > 1e-9));
        self
    }
}

impl FromStr for Sweep {
    type Err = SsaError;

    /// `key=start:stop:step` or `key=v1,v2,…`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| SsaError::InvalidConfig(format!("sweep '{s}': {why}"));
        let (key, spec) = s.split_once('=').ok_or_else(|| bad("expected key=values"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(bad("empty key"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("range needs start:stop:step"));
            }
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(bad("need step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        } else {
            spec.split(',').map(num).collect::<Result<Vec<f64>>>()?
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad("no finite values"));
        }
        Ok(Sweep {
            key: key.to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    /// Swept key and value; empty without a sweep.
    pub params: BTreeMap<String, f64>,
    /// Replicates whose pipeline raised an error.
    pub failures: usize,
    pub metrics: BTreeMap<String, MonteCarloSummary>,
}

impl GridPoint {
    pub fn mean(&self, metric: &str) -> f64 {
        self.metrics.get(metric).map_or(f64::NAN, |s| s.winsorized_mean)
    }

    /// Square root of the winsorized mean of a squared-error metric.
    pub fn rmse(&self, squared_metric: &str) -> f64 {
        self.mean(squared_metric).sqrt()
    }
}

/// Squared frequency errors with the two groups matched to the two terms.
fn frequency_errors(estimated: &[f64], truth: &[f64]) -> Option<Vec<f64>> {
    if estimated.len() != truth.len() || estimated.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let sq = |perm: &[usize]| -> Vec<f64> {
        truth.iter().zip(perm).map(|(t, &j)| (estimated[j] - t).powi(2)).collect()
    };
    let direct: Vec<usize> = (0..truth.len()).collect();
    let mut best = sq(&direct);
    if truth.len() == 2 {
        let swapped = sq(&[1, 0]);
        if swapped.iter().sum::<f64>() < best.iter().sum::<f64>() {
            best = swapped;
        }
    }
    Some(best)
}

/// Runs `reps` noisy replicates of `scenario` for every sweep value.
///
/// Replicate `i` draws its noise from [`replicate_rng`]`(base_seed, i)`, so
/// every grid point sees the same noise realisations.
pub fn monte_carlo(
    scenario: &Scenario,
    reps: usize,
    base_seed: u64,
    sweep: Option<&Sweep>,
    winsorize_fraction: f64,
) -> Result<Vec<GridPoint>> {
    if reps == 0 {
        return Err(SsaError::InvalidConfig("reps must be at least 1".into()));
    }
    if !(0.0..0.5).contains(&winsorize_fraction) {
        return Err(SsaError::InvalidConfig("winsorize fraction must lie in [0, 0.5)".into()));
    }
    let points: Vec<Option<f64>> = match sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let mut sc = scenario.clone();
        let mut params = BTreeMap::new();
        if let (Some(s), Some(v)) = (sweep, point) {
            sc.set(&s.key, &v.to_string())?;
            params.insert(s.key.clone(), v);
        }
        let clean = generate(&sc.signal())?;
        let spec = sc.pipeline()?;
        let truth: Vec<f64> = sc.terms.iter().map(|t| t.frequency).collect();

        let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut failures = 0;
        for i in 0..reps {
            let mut rng = replicate_rng(base_seed, i as u64);
            let noisy = add_noise_with(&clean, sc.noise_sd, &mut rng)?;
            let run = match run_pipeline(&noisy, &spec) {
                Ok(run) => run,
                Err(e) => {
                    log::debug!("replicate {i} failed: {e}");
                    failures += 1;
                    continue;
                }
            };
            let mut metrics = collect_metrics(&sc, &run)?;
            if let Some(errs) = frequency_errors(&run.group_frequency, &truth) {
                for (k, e) in errs.iter().enumerate() {
                    metrics.insert(format!("sq_err_omega{}", k + 1), *e);
                }
                metrics.insert("sq_err".into(), errs.iter().sum::<f64>() / errs.len() as f64);
            }
            for (k, v) in metrics {
                values.entry(k).or_default().push(v);
            }
        }
        let metrics = values
            .into_iter()
            .map(|(k, v)| (k, MonteCarloSummary::new(v, winsorize_fraction)))
            .collect();
        out.push(GridPoint {
            params,
            failures,
            metrics,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::Registry;

    #[test]
    fn winsorize_basics() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        let w = winsorize(&v, 0.05);
        assert_eq!(w[0], 2.0);
        assert_eq!(w[19], 19.0);
        assert_eq!(winsorize(&w, 0.05), w);
        assert_eq!(winsorized_mean(&[3.5], 0.0), 3.5);
        assert_eq!(winsorize(&v, 0.0), v);
        let m = winsorized_mean(&[1.0, 2.0, 100.0], 0.4);
        assert!((1.0..=100.0).contains(&m));
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "omega1=0.03:0.1:0.01".parse().unwrap();
        assert_eq!(s.values.len(), 8);
        assert_eq!(s.values[7], 0.1);
        let s = s.exclude(&[0.06]);
        assert_eq!(s.values.len(), 7);
        let l: Sweep = "kappa=1.5,2,3".parse().unwrap();
        assert_eq!(l.values, vec![1.5, 2.0, 3.0]);
        for bad in ["omega1", "=1", "x=1:2", "x=2:1:0.1", "x=1:2:0", "x=a"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }

    #[test]
    fn single_replicate_summary_is_its_value() {
        let reg = Registry::builtin();
        let mut sc = reg.get("iossa-noisy").unwrap().clone();
        sc.max_iter = Some(5);
        let grid = monte_carlo(&sc, 1, 9, None, 0.0).unwrap();
        assert_eq!(grid.len(), 1);
        let it = &grid[0].metrics["iterations"];
        assert_eq!(it.replicates, 1);
        assert_eq!(it.winsorized_mean, it.per_replicate[0]);
        let again = monte_carlo(&sc, 1, 9, None, 0.0).unwrap();
        assert_eq!(again[0].metrics["sq_err"], grid[0].metrics["sq_err"]);
        assert!(monte_carlo(&sc, 0, 9, None, 0.0).is_err());
        assert!(monte_carlo(&sc, 1, 9, None, 0.5).is_err());
    }
}
