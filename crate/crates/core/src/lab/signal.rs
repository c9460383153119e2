use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsaError};
use crate::series::TimeSeries;

/// `A nʲ e^{αn} sin(2πωn + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalTerm {
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default)]
    pub degree: u32,
}

impl SignalTerm {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: 0.0,
            rate: 0.0,
            degree: 0,
        }
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        Self {
            amplitude,
            frequency: 0.0,
            phase: PI / 2.0,
            rate,
            degree: 0,
        }
    }

    pub fn polynomial(amplitude: f64, degree: u32) -> Self {
        Self {
            amplitude,
            frequency: 0.0,
            phase: PI / 2.0,
            rate: 0.0,
            degree,
        }
    }

    pub fn value(&self, n: usize) -> f64 {
        let t = n as f64;
        self.amplitude
            * t.powi(self.degree as i32)
            * (self.rate * t).exp()
            * (2.0 * PI * self.frequency * t + self.phase).sin()
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.amplitude, self.frequency, self.phase, self.rate]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(SsaError::InvalidConfig("signal term has non-finite parameters".into()));
        }
        if !(0.0..=0.5).contains(&self.frequency) {
            return Err(SsaError::InvalidConfig(format!(
                "frequency {} outside [0, 0.5]",
                self.frequency
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub terms: Vec<SignalTerm>,
    pub len: usize,
}

impl SignalSpec {
    pub fn new(terms: Vec<SignalTerm>, len: usize) -> Self {
        Self { terms, len }
    }

    pub fn validate(&self) -> Result<()> {
        self.terms.iter().try_for_each(SignalTerm::validate)
    }

    /// Each term evaluated separately at `n = 1..N`.
    pub fn term_series(&self) -> Result<Vec<TimeSeries>> {
        self.validate()?;
        self.terms
            .iter()
            .map(|t| TimeSeries::new((1..=self.len).map(|n| t.value(n)).collect()))
            .collect()
    }
}

/// Sum of the terms at `n = 1..N`.
pub fn generate(spec: &SignalSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let values = (1..=spec.len)
        .map(|n| spec.terms.iter().map(|t| t.value(n)).sum())
        .collect();
    TimeSeries::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Generator for replicate `index` of a run seeded with `base_seed`:
/// ChaCha8 keyed by the seed, one stream per replicate.
pub fn replicate_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Adds `σ ε_n` with standard normal `ε_n` drawn from `rng`.
pub fn add_noise_with(series: &TimeSeries, sigma: f64, rng: &mut ChaCha8Rng) -> Result<TimeSeries> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(SsaError::InvalidConfig(format!("noise sd must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(series.clone());
    }
    let values = series
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(rng);
            x + sigma * e
        })
        .collect();
    TimeSeries::new(values)
}

/// Adds white Gaussian noise from a generator seeded with `noise.seed`.
pub fn add_noise(series: &TimeSeries, noise: &NoiseSpec) -> Result<TimeSeries> {
    add_noise_with(series, noise.sigma, &mut replicate_rng(noise.seed, 0))
}
