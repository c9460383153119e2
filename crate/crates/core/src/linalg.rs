//! Dense SVD helpers shared by every decomposition.
//!
//! All factorizations returned from here are thin, sorted by non-increasing
//! singular value, and sign-normalised so that the entry of largest magnitude
//! in each left singular vector is positive.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative rank tolerance used when the caller does not supply one: `1e-11 * max(L, K)`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    1e-11 * rows.max(cols) as f64
}

/// Thin singular value decomposition `M = U diag(s) Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Number of singular values above `rel_tol * s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank(self.s.as_slice(), rel_tol)
    }

    /// Keeps the leading `r` triples.
    pub fn truncate(self, r: usize) -> Svd {
        let r = r.min(self.s.len());
        Svd {
            u: self.u.columns(0, r).into_owned(),
            s: self.s.rows(0, r).into_owned(),
            v: self.v.columns(0, r).into_owned(),
        }
    }
}

pub fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    let max = s.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * max).count()
}

/// Full thin SVD, sorted and sign-normalised.
pub fn thin_svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(rows, 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        };
    }
    // nalgebra's Golub-Kahan SVD can return a wrong factorization for some
    // rank-deficient Hankel matrices; faer's is reliable on them.
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = match fm.thin_svd() {
        Ok(svd) => svd,
        Err(e) => panic!("SVD failed to converge: {e:?}"),
    };
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut out = Svd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        s: DVector::from_fn(k, |j, _| s[order[j]]),
        v: DMatrix::from_fn(cols, k, |i, j| v[(i, order[j])]),
    };
    normalize_signs(&mut out.u, &mut out.v);
    out
}

/// Leading `r` singular triples.
///
/// Uses block orthogonal iteration with Rayleigh-Ritz extraction and falls back
/// to the full SVD for small matrices or when the iteration stalls.
pub fn leading_svd(m: &DMatrix<f64>, r: usize) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let block = (r + 6).min(k);
    if r == 0 || k <= 2 * block {
        return thin_svd(m).truncate(r);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_f55a);
    let omega = DMatrix::from_fn(cols, block, |_, _| StandardNormal.sample(&mut rng));
    let mut q = (m * omega).qr().q();
    let scale = m.norm();
    if scale == 0.0 {
        return thin_svd(m).truncate(r);
    }

    for _ in 0..200 {
        let z = m.transpose() * &q;
        let small = thin_svd(&z.transpose());
        let u = &q * &small.u;
        let s1 = small.s[0];
        let mut converged = s1 > 0.0;
        for i in 0..r {
            let res = m * small.v.column(i) - u.column(i) * small.s[i];
            if res.norm() > 1e-13 * s1 {
                converged = false;
                break;
            }
        }
        if converged {
            let mut out = Svd {
                u,
                s: small.s,
                v: small.v,
            }
            .truncate(r);
            normalize_signs(&mut out.u, &mut out.v);
            return out;
        }
        q = (m * z).qr().q();
    }
    log::debug!("leading_svd: block iteration stalled, using full SVD");
    thin_svd(m).truncate(r)
}

/// Flips each pair `(u_i, v_i)` so that the largest-magnitude entry of `u_i` is positive.
pub fn normalize_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let pivot = u
            .column(j)
            .iter()
            .cloned()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            u.column_mut(j).neg_mut();
            if j < v.ncols() {
                v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Moore-Penrose pseudo-inverse, zeroing singular values `<= rel_tol * s_max`.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = thin_svd(m);
    let r = svd.rank(rel_tol);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for i in 0..r {
        out += svd.v.column(i) * svd.u.column(i).transpose() / svd.s[i];
    }
    out
}

/// Orthonormal basis of the column space (rank decided by `rel_tol`).
pub fn column_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = thin_svd(m);
    let r = svd.rank(rel_tol);
    svd.u.columns(0, r).into_owned()
}
