//! Oblique inner products and the restricted (L,R)-SVD.

mod decomposition;
mod metric;

pub use decomposition::{
    check_consistency, lr_svd, lr_svd_with, rescale_decomposition, ConsistencyPolicy,
    DecompositionKind, LrSvdOptions, MatrixDecomposition, Triple,
};
pub use metric::{factor_psd, orthonormalizer_from_basis, pseudo_inverse, InnerProduct};
