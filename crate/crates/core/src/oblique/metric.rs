use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SsaError};
use crate::linalg;

/// A positive semi-definite inner product `⟨x, y⟩_A = xᵀ A y` held through a
/// factor `O` with `A = Oᵀ O`.
///
/// `O` is `r x M` with linearly independent rows, so `r` is the rank of `A`.
/// The pseudo-inverse of the factor is kept alongside it; every oblique
/// decomposition needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProduct {
    factor: DMatrix<f64>,
    factor_pinv: DMatrix<f64>,
    identity: bool,
}

impl InnerProduct {
    /// The standard Euclidean inner product on `R^dim`.
    pub fn identity(dim: usize) -> Self {
        Self {
            factor: DMatrix::identity(dim, dim),
            factor_pinv: DMatrix::identity(dim, dim),
            identity: true,
        }
    }

    /// Wraps an arbitrary factor; its rows must be linearly independent.
    pub fn from_factor(factor: DMatrix<f64>) -> Result<Self> {
        let tol = linalg::default_rank_tol(factor.nrows(), factor.ncols());
        let rank = linalg::thin_svd(&factor).rank(tol);
        if rank < factor.nrows() {
            return Err(SsaError::RankDeficientBasis {
                rank,
                expected: factor.nrows(),
            });
        }
        let factor_pinv = linalg::pinv(&factor, tol);
        Ok(Self {
            factor,
            factor_pinv,
            identity: false,
        })
    }

    /// Trusted constructor; the caller guarantees `factor_pinv = factor⁺`.
    pub(crate) fn from_parts(factor: DMatrix<f64>, factor_pinv: DMatrix<f64>) -> Self {
        debug_assert_eq!(factor.shape(), (factor_pinv.ncols(), factor_pinv.nrows()));
        Self {
            factor,
            factor_pinv,
            identity: false,
        }
    }

    /// Rank `r` of the metric.
    pub fn rank(&self) -> usize {
        self.factor.nrows()
    }

    /// Ambient dimension `M`.
    pub fn dim(&self) -> usize {
        self.factor.ncols()
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn factor_pinv(&self) -> &DMatrix<f64> {
        &self.factor_pinv
    }

    /// The metric matrix `A = Oᵀ O`.
    pub fn matrix(&self) -> DMatrix<f64> {
        if self.identity {
            return self.factor.clone();
        }
        self.factor.transpose() * &self.factor
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        if self.identity {
            return x.dot(y);
        }
        (&self.factor * x).dot(&(&self.factor * y))
    }

    /// `O m`, skipping the product for the identity metric.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        if self.identity {
            m.clone()
        } else {
            &self.factor * m
        }
    }

    /// `O⁺ m`.
    pub fn apply_pinv(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        if self.identity {
            m.clone()
        } else {
            &self.factor_pinv * m
        }
    }

    /// Orthogonal projection of the columns of `m` onto the column space of `A`.
    pub fn project(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        if self.identity {
            m.clone()
        } else {
            &self.factor_pinv * (&self.factor * m)
        }
    }
}

/// Factors a symmetric PSD matrix through its eigendecomposition, dropping
/// eigenvalues `<= rel_tol * λ_max`.
pub fn factor_psd(a: &DMatrix<f64>, rel_tol: f64) -> Result<InnerProduct> {
    if !a.is_square() {
        return Err(SsaError::ShapeMismatch {
            expected: (a.nrows(), a.nrows()),
            found: a.shape(),
        });
    }
    let scale = a.norm();
    let asymmetry = (a - a.transpose()).norm();
    if asymmetry > rel_tol.max(1e-12) * scale {
        return Err(SsaError::NotSymmetric { asymmetry });
    }
    let dim = a.nrows();
    if scale == 0.0 {
        return Ok(InnerProduct::from_parts(
            DMatrix::zeros(0, dim),
            DMatrix::zeros(dim, 0),
        ));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if let Some(&neg) = eig.eigenvalues.iter().find(|&&l| l < -rel_tol * max) {
        return Err(SsaError::NegativeEigenvalue { value: neg });
    }
    let mut kept: Vec<usize> = (0..dim)
        .filter(|&i| eig.eigenvalues[i] > rel_tol * max)
        .collect();
    kept.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));

    let r = kept.len();
    let mut factor = DMatrix::zeros(r, dim);
    let mut pinv = DMatrix::zeros(dim, r);
    for (row, &i) in kept.iter().enumerate() {
        let root = eig.eigenvalues[i].sqrt();
        let v = eig.eigenvectors.column(i);
        factor.row_mut(row).copy_from(&(v.transpose() * root));
        pinv.column_mut(row).copy_from(&(v / root));
    }
    Ok(InnerProduct::from_parts(factor, pinv))
}

/// The metric under which the columns of `basis` are orthonormal: `O = P⁺`.
pub fn orthonormalizer_from_basis(basis: &DMatrix<f64>) -> Result<InnerProduct> {
    let tol = linalg::default_rank_tol(basis.nrows(), basis.ncols());
    let svd = linalg::thin_svd(basis);
    let rank = svd.rank(tol);
    if rank < basis.ncols() {
        return Err(SsaError::RankDeficientBasis {
            rank,
            expected: basis.ncols(),
        });
    }
    let mut factor = DMatrix::zeros(basis.ncols(), basis.nrows());
    for i in 0..rank {
        factor += svd.v.column(i) * svd.u.column(i).transpose() / svd.s[i];
    }
    Ok(InnerProduct::from_parts(factor, basis.clone()))
}

/// Moore-Penrose pseudo-inverse via SVD.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    linalg::pinv(m, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oblique_metric() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[5.0, -3.0, -3.0, 2.0])
    }

    #[test]
    fn identity_factor() {
        let ip = factor_psd(&DMatrix::identity(2, 2), 1e-12).unwrap();
        assert_eq!(ip.rank(), 2);
        assert!((ip.matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn oblique_pair_is_orthogonal() {
        let ip = factor_psd(&oblique_metric(), 1e-12).unwrap();
        assert!((ip.matrix() - oblique_metric()).norm() < 1e-12);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        assert!(ip.inner(&x, &y).abs() < 1e-12);
        assert!((x.dot(&y) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_metric() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let ip = factor_psd(&(&v * v.transpose()), 1e-12).unwrap();
        assert_eq!(ip.rank(), 1);
        assert!((ip.matrix() - &v * v.transpose()).norm() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(factor_psd(&a, 1e-12), Err(SsaError::NotSymmetric { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            factor_psd(&b, 1e-12),
            Err(SsaError::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn basis_orthonormalizer_reproduces_metric() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 1.0]);
        let ip = orthonormalizer_from_basis(&p).unwrap();
        assert!((ip.matrix() - oblique_metric()).norm() < 1e-12);
        let e = DMatrix::<f64>::identity(2, 2);
        let id = orthonormalizer_from_basis(&e).unwrap();
        assert!((id.factor() - &e).norm() < 1e-14);
    }

    #[test]
    fn rank_deficient_basis_rejected() {
        let p = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(
            orthonormalizer_from_basis(&p),
            Err(SsaError::RankDeficientBasis { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn pinv_cases() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let inv = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 2.0]);
        assert!((pseudo_inverse(&m, 1e-12) - inv).norm() < 1e-12);
        let z = pseudo_inverse(&DMatrix::zeros(3, 2), 1e-12);
        assert_eq!(z.shape(), (2, 3));
        assert_eq!(z.norm(), 0.0);
    }
}
