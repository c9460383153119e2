use nalgebra::{DMatrix, DVector};

use super::metric::InnerProduct;
use crate::error::{Result, SsaError};
use crate::linalg;

/// One rank-one term `σ P Qᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub sigma: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

impl Triple {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose() * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecompositionKind {
    /// Orthonormal vectors in the standard inner product.
    Ordinary,
    /// `Pᵢᵀ L Pⱼ = δᵢⱼ`, `Qᵢᵀ R Qⱼ = δᵢⱼ`.
    Oblique {
        left: InnerProduct,
        right: InnerProduct,
    },
}

/// A minimal decomposition `Y = Σ σᵢ Pᵢ Qᵢᵀ`, sorted by non-increasing `σ`.
///
/// When several `σᵢ` coincide the decomposition is not unique; the order
/// delivered by the underlying SVD is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDecomposition {
    triples: Vec<Triple>,
    kind: DecompositionKind,
    shape: (usize, usize),
}

impl MatrixDecomposition {
    pub(crate) fn from_parts(
        triples: Vec<Triple>,
        kind: DecompositionKind,
        shape: (usize, usize),
    ) -> Self {
        Self {
            triples,
            kind,
            shape,
        }
    }

    /// Ordinary SVD truncated at numerical rank (`s > rel_tol * s_max`).
    pub fn ordinary(m: &DMatrix<f64>, rel_tol: f64) -> Self {
        let svd = linalg::thin_svd(m);
        let r = svd.rank(rel_tol);
        let triples = (0..r)
            .map(|i| Triple {
                sigma: svd.s[i],
                left: svd.u.column(i).into_owned(),
                right: svd.v.column(i).into_owned(),
            })
            .collect();
        Self {
            triples,
            kind: DecompositionKind::Ordinary,
            shape: m.shape(),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn kind(&self) -> &DecompositionKind {
        &self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.sigma).collect()
    }

    /// `Σ_{i ∈ indices} σᵢ Pᵢ Qᵢᵀ` (0-based indices).
    pub fn sum_of(&self, indices: &[usize]) -> DMatrix<f64> {
        let (rows, cols) = self.shape;
        if indices.is_empty() {
            return DMatrix::zeros(rows, cols);
        }
        let p = self.left_matrix(indices);
        let q = DMatrix::from_fn(cols, indices.len(), |i, j| {
            self.triples[indices[j]].right[i] * self.triples[indices[j]].sigma
        });
        p * q.transpose()
    }

    /// The represented matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.sum_of(&all)
    }

    /// Columns `Pᵢ` for the given indices.
    pub fn left_matrix(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.shape.0, indices.len(), |i, j| {
            self.triples[indices[j]].left[i]
        })
    }

    /// Columns `Qᵢ` for the given indices.
    pub fn right_matrix(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.shape.1, indices.len(), |i, j| {
            self.triples[indices[j]].right[i]
        })
    }
}

/// What `lr_svd` does when the metrics do not contain the spaces of `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsistencyPolicy {
    #[default]
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSvdOptions {
    /// Relative rank tolerance; `None` uses `1e-11 * max(L, K)`.
    pub rank_tol: Option<f64>,
    pub consistency_threshold: f64,
    pub policy: ConsistencyPolicy,
}

impl Default for LrSvdOptions {
    fn default() -> Self {
        Self {
            rank_tol: None,
            consistency_threshold: 1e-8,
            policy: ConsistencyPolicy::Warn,
        }
    }
}

fn check_shapes(y: &DMatrix<f64>, left: &InnerProduct, right: &InnerProduct) -> Result<()> {
    if left.dim() != y.nrows() || right.dim() != y.ncols() {
        return Err(SsaError::ShapeMismatch {
            expected: y.shape(),
            found: (left.dim(), right.dim()),
        });
    }
    Ok(())
}

/// Relative residuals of projecting the column space of `y` onto col(L) and
/// its row space onto col(R). Zero means the pair is consistent with `y`.
pub fn check_consistency(
    y: &DMatrix<f64>,
    left: &InnerProduct,
    right: &InnerProduct,
) -> (f64, f64) {
    let norm = y.norm();
    if norm == 0.0 {
        return (0.0, 0.0);
    }
    let left_res = if left.is_identity() {
        0.0
    } else {
        (y - left.project(y)).norm() / norm
    };
    let right_res = if right.is_identity() {
        0.0
    } else {
        let yt = y.transpose();
        (&yt - right.project(&yt)).norm() / norm
    };
    (left_res, right_res)
}

/// Restricted (L,R)-SVD with default options.
pub fn lr_svd(
    y: &DMatrix<f64>,
    left: &InnerProduct,
    right: &InnerProduct,
) -> Result<MatrixDecomposition> {
    lr_svd_with(y, left, right, &LrSvdOptions::default())
}

/// Restricted (L,R)-SVD: the SVD of `O_L Y O_Rᵀ` mapped back through the
/// factor pseudo-inverses, `Pᵢ = O_L⁺ Uᵢ`, `Qᵢ = O_R⁺ Vᵢ`.
pub fn lr_svd_with(
    y: &DMatrix<f64>,
    left: &InnerProduct,
    right: &InnerProduct,
    opts: &LrSvdOptions,
) -> Result<MatrixDecomposition> {
    check_shapes(y, left, right)?;
    let (rows, cols) = y.shape();
    let tol = opts
        .rank_tol
        .unwrap_or_else(|| linalg::default_rank_tol(rows, cols));

    let (left_res, right_res) = check_consistency(y, left, right);
    let worst = left_res.max(right_res);
    if worst > opts.consistency_threshold {
        let y_rank = linalg::thin_svd(y).rank(tol);
        let metric_rank = left.rank().min(right.rank());
        if y_rank > metric_rank {
            return Err(SsaError::InconsistentMetric(format!(
                "matrix rank {y_rank} exceeds metric rank {metric_rank}"
            )));
        }
        let msg = format!(
            "metrics not consistent with matrix: left residual {left_res:e}, right residual {right_res:e}"
        );
        match opts.policy {
            ConsistencyPolicy::Fail => return Err(SsaError::InconsistentMetric(msg)),
            ConsistencyPolicy::Warn => log::warn!("{msg}"),
        }
    }

    let core = right.apply(&left.apply(y).transpose()).transpose();
    let svd = linalg::thin_svd(&core);
    let r = svd.rank(tol);
    let u = svd.u.columns(0, r).into_owned();
    let v = svd.v.columns(0, r).into_owned();
    let mut p = left.apply_pinv(&u);
    let mut q = right.apply_pinv(&v);
    linalg::normalize_signs(&mut p, &mut q);

    let triples = (0..r)
        .map(|i| Triple {
            sigma: svd.s[i],
            left: p.column(i).into_owned(),
            right: q.column(i).into_owned(),
        })
        .collect();
    let kind = if left.is_identity() && right.is_identity() {
        DecompositionKind::Ordinary
    } else {
        DecompositionKind::Oblique {
            left: left.clone(),
            right: right.clone(),
        }
    };
    Ok(MatrixDecomposition {
        triples,
        kind,
        shape: (rows, cols),
    })
}

/// Rescales directions without changing the represented matrix:
/// `σ̃ᵢ = σᵢ / (μᵢ νᵢ)`, `P̃ᵢ = μᵢ Pᵢ`, `Q̃ᵢ = νᵢ Qᵢ`, re-sorted by `σ̃`.
///
/// The result is the (L̃,R̃)-SVD with `O_L̃ = P̃⁺` and `O_R̃ = Q̃⁺`.
pub fn rescale_decomposition(
    d: &MatrixDecomposition,
    mu: &[f64],
    nu: &[f64],
) -> Result<MatrixDecomposition> {
    for scales in [mu, nu] {
        if scales.len() != d.len() {
            return Err(SsaError::ShapeMismatch {
                expected: (d.len(), 1),
                found: (scales.len(), 1),
            });
        }
        if let Some((index, &value)) = scales.iter().enumerate().find(|(_, &s)| !(s > 0.0)) {
            return Err(SsaError::NonPositiveScale { index, value });
        }
    }
    let mut triples: Vec<Triple> = d
        .triples
        .iter()
        .zip(mu.iter().zip(nu))
        .map(|(t, (&m, &n))| Triple {
            sigma: t.sigma / (m * n),
            left: &t.left * m,
            right: &t.right * n,
        })
        .collect();
    triples.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));

    let all: Vec<usize> = (0..triples.len()).collect();
    let scaled = MatrixDecomposition {
        triples,
        kind: DecompositionKind::Ordinary,
        shape: d.shape,
    };
    let left = super::orthonormalizer_from_basis(&scaled.left_matrix(&all))?;
    let right = super::orthonormalizer_from_basis(&scaled.right_matrix(&all))?;
    Ok(MatrixDecomposition {
        kind: DecompositionKind::Oblique { left, right },
        ..scaled
    })
}
