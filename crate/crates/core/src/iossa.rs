//! Iterative Oblique SSA.
//!
//! Starting from an initial (L,R)-SVD of a rank-`r` matrix `Y` split into two
//! groups, each step hankelizes the two grouped matrices, keeps their leading
//! `r₁` and `r₂` singular vectors, projects them onto the column and row
//! spaces of `Y` and uses the stacked projections as an orthonormalizing
//! basis for the next pair of metrics. Optionally the second group is damped
//! (sigma-correction) so that its σ's stay below those of the first group.
//!
//! Convergence is not guaranteed; the report carries the per-iteration
//! history so callers can inspect stalls or oscillation.

use nalgebra::DMatrix;

use crate::error::{Result, SsaError};
use crate::linalg;
use crate::oblique::{
    lr_svd, orthonormalizer_from_basis, DecompositionKind, InnerProduct, MatrixDecomposition,
    Triple,
};
use crate::series::{hankelize, unembed, TimeSeries};
use crate::ssa::Grouping;

/// Orthogonal projector onto a subspace, stored through an orthonormal basis.
#[derive(Debug, Clone)]
pub struct SubspaceProjector {
    basis: DMatrix<f64>,
}

impl SubspaceProjector {
    /// `basis` must have orthonormal columns.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * (self.basis.transpose() * m)
    }
}

#[derive(Debug, Clone)]
pub struct IterOssaConfig {
    /// Two groups over the components of `Y`.
    pub partition: Grouping,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Separating factor `κ > 1`; enables sigma-correction.
    pub kappa: Option<f64>,
    /// Initial `(L, R)`; identity when absent.
    pub initial: Option<(InnerProduct, InnerProduct)>,
}

impl IterOssaConfig {
    pub fn new(partition: Grouping) -> Self {
        Self {
            partition,
            epsilon: 1e-5,
            max_iter: 200,
            kappa: None,
            initial: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_initial(mut self, left: InnerProduct, right: InnerProduct) -> Self {
        self.initial = Some((left, right));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.partition.len() != 2 || self.partition.groups().iter().any(Vec::is_empty) {
            return Err(SsaError::InvalidConfig(
                "iterative O-SSA needs exactly two non-empty groups".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(SsaError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(SsaError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if let Some(k) = self.kappa {
            if !(k > 1.0) {
                return Err(SsaError::InvalidConfig("kappa must exceed 1".into()));
            }
        }
        let r: usize = self.partition.groups().iter().map(Vec::len).sum();
        self.partition.validate_partition(r)
    }

    fn ranks(&self) -> (usize, usize) {
        let g = self.partition.groups();
        (g[0].len(), g[1].len())
    }
}

/// Result of one metric update.
#[derive(Debug, Clone)]
pub struct MetricUpdate {
    pub left: InnerProduct,
    pub right: InnerProduct,
    /// `μ` applied to the second group, when sigma-correction fired.
    pub mu: Option<f64>,
}

/// One metric update from the previous grouped matrices.
///
/// With `kappa`, the second group's projected vectors are scaled by `√μ`,
/// `μ = κ √(λ₁⁽²⁾ / λ_{r₁}⁽¹⁾)`, whenever `λ_{r₁}⁽¹⁾ < κ² λ₁⁽²⁾`.
pub fn update_metrics(
    prev_group_matrices: &[DMatrix<f64>],
    partition: &Grouping,
    col_projector: &SubspaceProjector,
    row_projector: &SubspaceProjector,
    kappa: Option<f64>,
) -> Result<MetricUpdate> {
    if prev_group_matrices.len() != 2 || partition.len() != 2 {
        return Err(SsaError::InvalidConfig(
            "metric update needs exactly two groups".into(),
        ));
    }
    let ranks = [partition.groups()[0].len(), partition.groups()[1].len()];
    let tops: Vec<linalg::Svd> = prev_group_matrices
        .iter()
        .zip(ranks)
        .map(|(m, r)| linalg::leading_svd(hankelize(m).matrix(), r))
        .collect();

    let mut u_hat: Vec<DMatrix<f64>> = tops.iter().map(|t| col_projector.project(&t.u)).collect();
    let mut v_hat: Vec<DMatrix<f64>> = tops.iter().map(|t| row_projector.project(&t.v)).collect();

    let mut mu = None;
    if let Some(kappa) = kappa {
        let lambda_first = tops[0].s[ranks[0] - 1].powi(2);
        let lambda_second = tops[1].s[0].powi(2);
        if lambda_first < kappa * kappa * lambda_second {
            let m = kappa * (lambda_second / lambda_first).sqrt();
            let root = m.sqrt();
            u_hat[1] *= root;
            v_hat[1] *= root;
            mu = Some(m);
        }
    }

    let stack = |parts: &[DMatrix<f64>]| {
        let rows = parts[0].nrows();
        let cols = parts[0].ncols() + parts[1].ncols();
        let mut out = DMatrix::zeros(rows, cols);
        out.columns_mut(0, parts[0].ncols()).copy_from(&parts[0]);
        out.columns_mut(parts[0].ncols(), parts[1].ncols())
            .copy_from(&parts[1]);
        out
    };
    let as_stack_error = |side: &'static str| {
        move |e: SsaError| match e {
            SsaError::RankDeficientBasis { rank, expected } => SsaError::RankDeficientStack {
                side,
                rank,
                expected,
            },
            other => other,
        }
    };
    let left = orthonormalizer_from_basis(&stack(&u_hat)).map_err(as_stack_error("left"))?;
    let right = orthonormalizer_from_basis(&stack(&v_hat)).map_err(as_stack_error("right"))?;
    Ok(MetricUpdate { left, right, mu })
}

#[derive(Debug, Clone)]
pub struct IterOssaReport {
    pub components: [TimeSeries; 2],
    pub grouped_matrices: [DMatrix<f64>; 2],
    pub iterations: usize,
    pub converged: bool,
    /// `max_m ‖Ỹ⁽ᵐ,ᵏ⁾ − Ỹ⁽ᵐ,ᵏ⁻¹⁾‖² / N` for k = 1, 2, ….
    pub history: Vec<f64>,
    pub final_metrics: (InnerProduct, InnerProduct),
    pub decomposition: MatrixDecomposition,
    /// Partition applied to the final decomposition.
    pub partition: Grouping,
    /// Iterations in which sigma-correction scaled the second group.
    pub sigma_corrections: usize,
}

fn split(d: &MatrixDecomposition, partition: &Grouping) -> ([DMatrix<f64>; 2], [TimeSeries; 2]) {
    let g = partition.groups();
    let a = d.sum_of(&g[0]);
    let b = d.sum_of(&g[1]);
    let sa = unembed(&a);
    let sb = unembed(&b);
    ([a, b], [sa, sb])
}

fn mean_sq_diff(a: &TimeSeries, b: &TimeSeries) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// Runs Iterative O-SSA on `y`. Hitting `max_iter` is reported, not raised.
pub fn iterate_ossa(y: &DMatrix<f64>, cfg: &IterOssaConfig) -> Result<IterOssaReport> {
    cfg.validate()?;
    let (rows, cols) = y.shape();
    let (r1, r2) = cfg.ranks();
    let r = r1 + r2;
    let tol = linalg::default_rank_tol(rows, cols);
    let svd = linalg::thin_svd(y);
    let rank = svd.rank(tol);
    if rank != r {
        return Err(SsaError::InvalidConfig(format!(
            "matrix rank {rank} does not match partition size {r}"
        )));
    }
    let col = SubspaceProjector::from_orthonormal(svd.u.columns(0, r).into_owned());
    let row = SubspaceProjector::from_orthonormal(svd.v.columns(0, r).into_owned());

    let (mut left, mut right, mut decomposition) = match &cfg.initial {
        Some((l, rm)) => (l.clone(), rm.clone(), lr_svd(y, l, rm)?),
        None => {
            let triples = (0..r)
                .map(|i| Triple {
                    sigma: svd.s[i],
                    left: svd.u.column(i).into_owned(),
                    right: svd.v.column(i).into_owned(),
                })
                .collect();
            (
                InnerProduct::identity(rows),
                InnerProduct::identity(cols),
                MatrixDecomposition::from_parts(triples, DecompositionKind::Ordinary, (rows, cols)),
            )
        }
    };
    if decomposition.len() != r {
        return Err(SsaError::InvalidConfig(format!(
            "initial decomposition has {} components, partition expects {r}",
            decomposition.len()
        )));
    }

    let mut partition = cfg.partition.clone();
    let (mut mats, mut comps) = split(&decomposition, &partition);
    let mut history = Vec::new();
    let mut sigma_corrections = 0;
    let mut converged = false;
    let mut k = 0;
    let eps2 = cfg.epsilon * cfg.epsilon;
    let leading_first = Grouping::new(vec![(0..r1).collect(), (r1..r).collect()])?;

    while k < cfg.max_iter {
        k += 1;
        let update = update_metrics(&mats, &partition, &col, &row, cfg.kappa)?;
        if update.mu.is_some() {
            sigma_corrections += 1;
        }
        if cfg.kappa.is_some() {
            partition = leading_first.clone();
        }
        left = update.left;
        right = update.right;
        decomposition = lr_svd(y, &left, &right)?;
        if decomposition.len() != r {
            return Err(SsaError::RankDeficientStack {
                side: "core",
                rank: decomposition.len(),
                expected: r,
            });
        }
        let (new_mats, new_comps) = split(&decomposition, &partition);
        let delta = mean_sq_diff(&new_comps[0], &comps[0]).max(mean_sq_diff(&new_comps[1], &comps[1]));
        history.push(delta);
        mats = new_mats;
        comps = new_comps;
        if delta < eps2 {
            converged = true;
            break;
        }
    }

    Ok(IterOssaReport {
        components: comps,
        grouped_matrices: mats,
        iterations: k,
        converged,
        history,
        final_metrics: (left, right),
        decomposition,
        partition,
        sigma_corrections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oblique::orthonormalizer_from_basis;
    use crate::series::embed;
    use std::f64::consts::PI;

    fn sine(w: f64, a: f64, n: usize) -> TimeSeries {
        TimeSeries::new((1..=n).map(|i| a * (2.0 * PI * w * i as f64).sin()).collect()).unwrap()
    }

    fn partition() -> Grouping {
        "1,2;3,4".parse().unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(IterOssaConfig::new("1,2".parse().unwrap()).validate().is_err());
        assert!(IterOssaConfig::new(partition()).with_epsilon(0.0).validate().is_err());
        assert!(IterOssaConfig::new(partition()).with_max_iter(0).validate().is_err());
        assert!(IterOssaConfig::new(partition()).with_kappa(1.0).validate().is_err());
        assert!(IterOssaConfig::new("1,2;4,5".parse().unwrap()).validate().is_err());
        assert!(IterOssaConfig::new(partition()).with_kappa(2.0).validate().is_ok());
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let x = sine(0.1, 1.0, 40);
        let t = embed(&x, 20).unwrap();
        let err = iterate_ossa(t.matrix(), &IterOssaConfig::new(partition())).unwrap_err();
        assert!(matches!(err, SsaError::InvalidConfig(_)));
    }

    /// Separating decomposition built from the true trajectory spaces.
    fn separated_setup() -> (DMatrix<f64>, [TimeSeries; 2], InnerProduct, InnerProduct) {
        let (n, l) = (150, 70);
        // larger amplitude first so the σ order matches the group order
        let a = sine(0.06, 1.2, n);
        let b = sine(0.065, 1.0, n);
        let ta = embed(&a, l).unwrap();
        let tb = embed(&b, l).unwrap();
        let y = ta.matrix() + tb.matrix();
        let sa = linalg::thin_svd(ta.matrix()).truncate(2);
        let sb = linalg::thin_svd(tb.matrix()).truncate(2);
        let cat = |x: &DMatrix<f64>, z: &DMatrix<f64>| {
            DMatrix::from_fn(x.nrows(), 4, |i, j| if j < 2 { x[(i, j)] } else { z[(i, j - 2)] })
        };
        let left = orthonormalizer_from_basis(&cat(&sa.u, &sb.u)).unwrap();
        let right = orthonormalizer_from_basis(&cat(&sa.v, &sb.v)).unwrap();
        (y, [a, b], left, right)
    }

    #[test]
    fn separating_decomposition_is_fixed_point() {
        let (y, truth, left, right) = separated_setup();
        let initial = crate::ssa::nested_ossa(&y, &left, &right, &partition()).unwrap();
        assert!(initial.components[0].max_abs_diff(&truth[0]) < 1e-8);

        let cfg = IterOssaConfig::new(partition())
            .with_max_iter(1)
            .with_initial(left, right);
        let report = iterate_ossa(&y, &cfg).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        for m in 0..2 {
            assert!(report.components[m].max_abs_diff(&initial.components[m]) < 1e-8);
        }
    }

    #[test]
    fn fixed_point_under_metric_update() {
        let (y, truth, _, _) = separated_setup();
        let svd = linalg::thin_svd(&y);
        let col = SubspaceProjector::from_orthonormal(svd.u.columns(0, 4).into_owned());
        let row = SubspaceProjector::from_orthonormal(svd.v.columns(0, 4).into_owned());
        let mats = [embed(&truth[0], 70).unwrap().into_matrix(), embed(&truth[1], 70).unwrap().into_matrix()];
        let update = update_metrics(&mats, &partition(), &col, &row, None).unwrap();
        assert!(update.mu.is_none());
        let d = lr_svd(&y, &update.left, &update.right).unwrap();
        assert!((d.sum_of(&[0, 1]) - &mats[0]).abs().max() < 1e-8);
        assert!((d.sum_of(&[2, 3]) - &mats[1]).abs().max() < 1e-8);

        // κ small enough that the correction does not trigger: metrics coincide
        let with_kappa = update_metrics(&mats, &partition(), &col, &row, Some(1.01)).unwrap();
        assert!(with_kappa.mu.is_none());
        assert!((with_kappa.left.matrix() - update.left.matrix()).norm() < 1e-12);
    }

    #[test]
    fn sigma_correction_orders_groups() {
        let (n, l) = (150, 70);
        let a = sine(0.065, 1.0, n);
        let b = sine(0.06, 1.0, n);
        let y = embed(&a.add(&b), l).unwrap().into_matrix();
        let svd = linalg::thin_svd(&y);
        let col = SubspaceProjector::from_orthonormal(svd.u.columns(0, 4).into_owned());
        let row = SubspaceProjector::from_orthonormal(svd.v.columns(0, 4).into_owned());
        let mats = [embed(&a, l).unwrap().into_matrix(), embed(&b, l).unwrap().into_matrix()];

        let expected_mu = {
            let s1 = linalg::thin_svd(&mats[0]).s;
            let s2 = linalg::thin_svd(&mats[1]).s;
            2.0 * s2[0] / s1[1]
        };
        let update = update_metrics(&mats, &partition(), &col, &row, Some(2.0)).unwrap();
        let mu = update.mu.expect("correction must fire for equal amplitudes");
        assert!((mu - expected_mu).abs() < 1e-10 * expected_mu);

        let d = lr_svd(&y, &update.left, &update.right).unwrap();
        let s = d.sigmas();
        assert!(s[1] > s[2], "{s:?}");
        // the leading pair now reproduces the first sinusoid
        assert!((d.sum_of(&[0, 1]) - &mats[0]).abs().max() < 1e-8);
    }

    #[test]
    fn per_iteration_identity_and_stack_error() {
        let x = sine(0.065, 1.0, 150).add(&sine(0.06, 1.2, 150));
        let y = embed(&x, 70).unwrap().into_matrix();
        let d = crate::ssa::svd_decompose(&y);
        let y4 = d.sum_of(&[0, 1, 2, 3]);
        let target = unembed(&y4);
        for max_iter in [1, 3, 10] {
            let cfg = IterOssaConfig::new(partition()).with_max_iter(max_iter);
            let rep = iterate_ossa(&y4, &cfg).unwrap();
            assert!(rep.iterations <= max_iter);
            let total = rep.components[0].add(&rep.components[1]);
            assert!(total.max_abs_diff(&target) < 1e-10);
            assert_eq!(rep.history.len(), rep.iterations);
        }

        let svd = linalg::thin_svd(&y4);
        let col = SubspaceProjector::from_orthonormal(svd.u.columns(0, 4).into_owned());
        let row = SubspaceProjector::from_orthonormal(svd.v.columns(0, 4).into_owned());
        let same = embed(&sine(0.065, 1.0, 150), 70).unwrap().into_matrix();
        let err = update_metrics(&[same.clone(), same], &partition(), &col, &row, None).unwrap_err();
        assert!(matches!(err, SsaError::RankDeficientStack { .. }));
    }
}
