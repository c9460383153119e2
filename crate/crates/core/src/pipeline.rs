//! End-to-end runs: Basic SSA, optionally refined by Iterative O-SSA or
//! DerivSSA, with the usual diagnostics attached.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::deriv::{deriv_ssa, DerivConfig};
use crate::diagnostics::{
    esprit_frequencies, f_correlation, lr_w_correlation, tau_rank_closeness, w_correlation_matrix,
    CorrelationMatrix,
};
use crate::error::{Result, SsaError};
use crate::iossa::{iterate_ossa, IterOssaConfig};
use crate::series::TimeSeries;
use crate::ssa::{basic_ssa, Grouping, SsaResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Basic,
    Iossa,
    Deriv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Basic => "basic",
            Method::Iossa => "iossa",
            Method::Deriv => "deriv",
        })
    }
}

impl FromStr for Method {
    type Err = SsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Method::Basic),
            "iossa" => Ok(Method::Iossa),
            "deriv" => Ok(Method::Deriv),
            other => Err(SsaError::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub window: usize,
    pub groups: Grouping,
    pub method: Method,
    pub epsilon: f64,
    pub max_iter: usize,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
}

impl PipelineSpec {
    pub fn new(window: usize, groups: Grouping, method: Method) -> Self {
        Self {
            window,
            groups,
            method,
            epsilon: 1e-5,
            max_iter: 200,
            kappa: None,
            gamma: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() || self.groups.groups().iter().any(Vec::is_empty) {
            return Err(SsaError::InvalidConfig("groups must be non-empty".into()));
        }
        match self.method {
            Method::Basic => {
                if self.kappa.is_some() || self.gamma.is_some() {
                    return Err(SsaError::InvalidConfig(
                        "kappa and gamma do not apply to basic SSA".into(),
                    ));
                }
            }
            Method::Iossa => {
                if self.gamma.is_some() {
                    return Err(SsaError::InvalidConfig("gamma applies only to deriv".into()));
                }
                if self.groups.len() != 2 {
                    return Err(SsaError::InvalidConfig(
                        "iossa refines exactly two groups".into(),
                    ));
                }
            }
            Method::Deriv => {
                if self.kappa.is_some() {
                    return Err(SsaError::InvalidConfig("kappa applies only to iossa".into()));
                }
                if self.gamma.is_none() {
                    return Err(SsaError::InvalidConfig("deriv needs gamma".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterationInfo {
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    pub sigma_corrections: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub basic: SsaResult,
    /// Final component per group.
    pub components: Vec<TimeSeries>,
    pub grouped_matrices: Vec<DMatrix<f64>>,
    /// Input minus the sum of the components.
    pub residual: TimeSeries,
    pub wcor_before: CorrelationMatrix,
    pub wcor_after: CorrelationMatrix,
    pub tau_before: Vec<f64>,
    pub tau_after: Vec<f64>,
    /// Oblique w-correlation of the two final groups (iossa only).
    pub lr_wcor: Option<f64>,
    /// Frobenius correlation of the two final grouped matrices.
    pub f_corr: Option<f64>,
    pub iteration: Option<IterationInfo>,
    /// LS-ESPRIT frequencies estimated from each group's left vectors.
    pub frequencies: Vec<Vec<f64>>,
    /// Mean `|arg μ| / 2π` over each group's roots.
    pub group_frequency: Vec<f64>,
}

fn taus(components: &[TimeSeries], window: usize, g: &Grouping) -> Result<Vec<f64>> {
    components
        .iter()
        .zip(g.groups())
        .map(|(c, idx)| tau_rank_closeness(c, window, idx.len()))
        .collect()
}

fn group_roots(bases: &[DMatrix<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    bases
        .iter()
        .map(|b| match esprit_frequencies(b) {
            Ok(roots) => {
                let mean = roots
                    .roots
                    .iter()
                    .map(|z| z.arg().abs() / (2.0 * std::f64::consts::PI))
                    .sum::<f64>()
                    / roots.roots.len() as f64;
                (roots.frequencies, mean)
            }
            Err(_) => (Vec::new(), f64::NAN),
        })
        .unzip()
}

pub fn run_pipeline(series: &TimeSeries, spec: &PipelineSpec) -> Result<PipelineOutput> {
    spec.validate()?;
    let window = spec.window;
    let basic = basic_ssa(series, window, &spec.groups)?;
    let wcor_before = w_correlation_matrix(&basic.components, window)?;
    let tau_before = taus(&basic.components, window, &spec.groups)?;
    let nested = spec.groups.nested_partition();

    let mut lr_wcor = None;
    let mut iteration = None;
    let (components, grouped_matrices, bases): (_, _, Vec<DMatrix<f64>>) = match spec.method {
        Method::Basic => {
            let bases = spec
                .groups
                .groups()
                .iter()
                .map(|g| basic.decomposition.left_matrix(g))
                .collect();
            (basic.components.clone(), basic.grouped_matrices.clone(), bases)
        }
        Method::Iossa => {
            let y = basic.grouped_matrices[0].clone() + &basic.grouped_matrices[1];
            let mut cfg = IterOssaConfig::new(nested)
                .with_epsilon(spec.epsilon)
                .with_max_iter(spec.max_iter);
            cfg.kappa = spec.kappa;
            let rep = iterate_ossa(&y, &cfg)?;
            let (left, right) = &rep.final_metrics;
            lr_wcor = Some(lr_w_correlation(
                &rep.grouped_matrices[0],
                &rep.grouped_matrices[1],
                left,
                right,
            )?);
            let bases = rep
                .partition
                .groups()
                .iter()
                .map(|g| rep.decomposition.left_matrix(g))
                .collect();
            iteration = Some(IterationInfo {
                iterations: rep.iterations,
                converged: rep.converged,
                history: rep.history.clone(),
                sigma_corrections: rep.sigma_corrections,
            });
            (rep.components.to_vec(), rep.grouped_matrices.to_vec(), bases)
        }
        Method::Deriv => {
            let mut y = basic.grouped_matrices[0].clone();
            for m in &basic.grouped_matrices[1..] {
                y += m;
            }
            let gamma = spec.gamma.expect("validated");
            let res = deriv_ssa(&y, &DerivConfig::new(gamma, nested.clone())?)?;
            let bases = nested.groups().iter().map(|g| res.left_matrix(g)).collect();
            (res.components, res.grouped_matrices, bases)
        }
    };

    let wcor_after = w_correlation_matrix(&components, window)?;
    let tau_after = taus(&components, window, &spec.groups)?;
    let f_corr = if grouped_matrices.len() == 2 {
        Some(f_correlation(&grouped_matrices[0], &grouped_matrices[1])?)
    } else {
        None
    };
    let mut fitted = TimeSeries::zeros(series.len());
    for c in &components {
        fitted = fitted.add(c);
    }
    let residual = series.sub(&fitted);
    let (frequencies, group_frequency) = group_roots(&bases);

    Ok(PipelineOutput {
        basic,
        components,
        grouped_matrices,
        residual,
        wcor_before,
        wcor_after,
        tau_before,
        tau_after,
        lr_wcor,
        f_corr,
        iteration,
        frequencies,
        group_frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sines(n: usize) -> TimeSeries {
        TimeSeries::new(
            (1..=n)
                .map(|i| {
                    let t = i as f64;
                    (2.0 * PI * t / 10.0).sin() + (2.0 * PI * t / 15.0).sin() + 0.01 * (t * 7.1).sin()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn validation_by_method() {
        let g: Grouping = "1,2;3,4".parse().unwrap();
        let mut spec = PipelineSpec::new(20, g.clone(), Method::Basic);
        assert!(spec.validate().is_ok());
        spec.gamma = Some(1.0);
        assert!(spec.validate().is_err());
        spec.method = Method::Deriv;
        assert!(spec.validate().is_ok());
        spec.kappa = Some(2.0);
        assert!(spec.validate().is_err());
        let mut three = PipelineSpec::new(20, "1;2;3".parse().unwrap(), Method::Iossa);
        assert!(three.validate().is_err());
        three.groups = g;
        assert!(three.validate().is_ok());
        assert_eq!("deriv".parse::<Method>().unwrap(), Method::Deriv);
        assert!("x".parse::<Method>().is_err());
    }

    #[test]
    fn components_and_residual_sum_to_input() {
        let x = sines(80);
        for method in [Method::Basic, Method::Iossa, Method::Deriv] {
            let mut spec = PipelineSpec::new(30, "1,2;3,4".parse().unwrap(), method);
            if method == Method::Deriv {
                spec.gamma = Some(5.0);
            }
            let out = run_pipeline(&x, &spec).unwrap();
            let mut total = out.residual.clone();
            for c in &out.components {
                total = total.add(c);
            }
            assert!(total.max_abs_diff(&x) < 1e-10, "{method}");
            assert_eq!(out.frequencies.len(), 2);
            assert_eq!(out.tau_after.len(), 2);
        }
    }
}
