//! DerivSSA: refinement through the column differences of a grouped matrix.
//!
//! The SVD of `Z = [Y : γ Φ(Y)]` has the column space of `Y` but weights each
//! direction by its variation, so components with equal contribution but
//! different frequencies acquire different singular values.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Result, SsaError};
use crate::linalg;
use crate::oblique::{InnerProduct, Triple};
use crate::series::{unembed, TimeSeries};
use crate::ssa::Grouping;

#[derive(Debug, Clone)]
pub struct DerivConfig {
    pub gamma: f64,
    pub partition: Grouping,
}

impl DerivConfig {
    pub fn new(gamma: f64, partition: Grouping) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SsaError::InvalidConfig(format!(
                "derivative weight must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma, partition })
    }
}

/// `Φ(Y) = [Y₂ − Y₁ : … : Y_K − Y_{K−1}]`.
pub fn column_diff(y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = y.ncols();
    if k < 2 {
        return Err(SsaError::TooFewColumns { cols: k });
    }
    Ok(y.columns(1, k - 1) - y.columns(0, k - 1))
}

/// The right metric `E + γ² FᵀF`, `F` the `(K−1) x K` difference matrix.
pub fn deriv_metric_matrix(k: usize, gamma: f64) -> DMatrix<f64> {
    let g2 = gamma * gamma;
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            let ends = usize::from(i > 0) + usize::from(i + 1 < k);
            1.0 + g2 * ends as f64
        } else if i.abs_diff(j) == 1 {
            -g2
        } else {
            0.0
        }
    })
}

/// [`deriv_metric_matrix`] as a factored inner product of full rank `K`.
pub fn deriv_metric(k: usize, gamma: f64) -> InnerProduct {
    let a = deriv_metric_matrix(k, gamma);
    // eigenvalues are at least 1, so Cholesky cannot fail
    let chol = Cholesky::new(a).expect("E + γ²FᵀF is positive definite");
    let lower = chol.l();
    let upper = lower.transpose();
    let inv_upper = upper
        .clone()
        .try_inverse()
        .expect("triangular factor with unit-bounded diagonal is invertible");
    InnerProduct::from_parts(upper, inv_upper)
}

#[derive(Debug, Clone)]
pub struct DerivResult {
    /// `(σᵢ, Uᵢ, Yᵀ Uᵢ / σᵢ)`, with `σᵢ` the singular values of `Z`.
    pub triples: Vec<Triple>,
    pub grouped_matrices: Vec<DMatrix<f64>>,
    pub components: Vec<TimeSeries>,
}

impl DerivResult {
    pub fn sigmas(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.sigma).collect()
    }

    pub fn left_matrix(&self, indices: &[usize]) -> DMatrix<f64> {
        let rows = self.triples.first().map_or(0, |t| t.left.len());
        DMatrix::from_fn(rows, indices.len(), |i, j| self.triples[indices[j]].left[i])
    }
}

/// DerivSSA of a matrix of rank `r`, the partition covering `{1..r}`.
pub fn deriv_ssa(y: &DMatrix<f64>, cfg: &DerivConfig) -> Result<DerivResult> {
    let (rows, cols) = y.shape();
    let r: usize = cfg.partition.groups().iter().map(Vec::len).sum();
    cfg.partition.validate_partition(r)?;
    let phi = column_diff(y)?;

    let mut z = DMatrix::zeros(rows, 2 * cols - 1);
    z.columns_mut(0, cols).copy_from(y);
    z.columns_mut(cols, cols - 1).copy_from(&(phi * cfg.gamma));

    let tol = linalg::default_rank_tol(rows, cols);
    let y_rank = linalg::thin_svd(y).rank(tol);
    if y_rank != r {
        return Err(SsaError::InvalidConfig(format!(
            "matrix rank {y_rank} does not match partition size {r}"
        )));
    }
    let svd = linalg::thin_svd(&z);
    let u = svd.u.columns(0, r).into_owned();
    let mut q = y.transpose() * &u;
    let triples: Vec<Triple> = (0..r)
        .map(|i| {
            let sigma = svd.s[i];
            let right = q.column_mut(i).unscale(sigma);
            Triple {
                sigma,
                left: u.column(i).into_owned(),
                right,
            }
        })
        .collect();

    let grouped_matrices: Vec<DMatrix<f64>> = cfg
        .partition
        .groups()
        .iter()
        .map(|g| {
            let ug = DMatrix::from_fn(rows, g.len(), |i, j| u[(i, g[j])]);
            &ug * (ug.transpose() * y)
        })
        .collect();
    let components = grouped_matrices.iter().map(unembed).collect();
    Ok(DerivResult {
        triples,
        grouped_matrices,
        components,
    })
}
