//! Separability and rank diagnostics, plus LS-ESPRIT frequency estimates.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, SsaError};
use crate::linalg;
use crate::oblique::InnerProduct;
use crate::series::{embed, w_weights, TimeSeries, WeightVector};

/// Symmetric matrix of correlations with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl CorrelationMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if !values.is_square() || labels.len() != values.nrows() {
            return Err(SsaError::ShapeMismatch {
                expected: (labels.len(), labels.len()),
                found: values.shape(),
            });
        }
        Ok(Self { values, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Largest `|ρ|` between an index in `a` and an index in `b`.
    pub fn max_abs_between(&self, a: &[usize], b: &[usize]) -> f64 {
        a.iter()
            .flat_map(|&i| b.iter().map(move |&j| self.values[(i, j)].abs()))
            .fold(0.0, f64::max)
    }

    /// Text rendering on a white-to-black scale of `|ρ|`, one row per line.
    pub fn heat_map(&self) -> String {
        const SHADES: &[u8] = b" .:-=+*#%@";
        let mut out = String::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                let level = (self.values[(i, j)].abs() * (SHADES.len() - 1) as f64).round() as usize;
                let c = SHADES[level.min(SHADES.len() - 1)] as char;
                out.push(c);
                out.push(c);
            }
            out.push('\n');
        }
        out
    }
}

fn cosine(dot: f64, na: f64, nb: f64) -> Result<f64> {
    if na == 0.0 || nb == 0.0 {
        return Err(SsaError::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn check_lengths(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(SsaError::ShapeMismatch {
            expected: (a.len(), 1),
            found: (b.len(), 1),
        });
    }
    Ok(())
}

fn weighted(w: &WeightVector, a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    cosine(w.inner(a, b), w.inner(a, a).sqrt(), w.inner(b, b).sqrt())
}

/// Weighted cosine `(Y, Z)_w / (‖Y‖_w ‖Z‖_w)`.
pub fn w_correlation(y: &TimeSeries, z: &TimeSeries, window: usize) -> Result<f64> {
    check_lengths(y, z)?;
    let w = w_weights(y.len(), window)?;
    weighted(&w, y, z)
}

/// All pairwise w-correlations; labels are `F1, F2, …`.
pub fn w_correlation_matrix(components: &[TimeSeries], window: usize) -> Result<CorrelationMatrix> {
    let p = components.len();
    let Some(first) = components.first() else {
        return CorrelationMatrix::new(DMatrix::zeros(0, 0), Vec::new());
    };
    for c in components {
        check_lengths(first, c)?;
    }
    let w = w_weights(first.len(), window)?;
    let norms: Vec<f64> = components.iter().map(|c| w.inner(c, c).sqrt()).collect();
    if norms.contains(&0.0) {
        return Err(SsaError::ZeroNorm);
    }
    let mut values = DMatrix::identity(p, p);
    for i in 0..p {
        for j in i + 1..p {
            let r = cosine(w.inner(&components[i], &components[j]), norms[i], norms[j])?;
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    let labels = (1..=p).map(|i| format!("F{i}")).collect();
    CorrelationMatrix::new(values, labels)
}

/// Frobenius cosine of two matrices.
pub fn f_correlation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(SsaError::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    cosine(a.dot(b), a.norm(), b.norm())
}

/// Cosine in the (L,R) Frobenius inner product `⟨O_L A O_Rᵀ, O_L B O_Rᵀ⟩_F`.
///
/// With metrics that do not contain the spaces of `A` and `B` only their
/// projections are compared.
pub fn lr_w_correlation(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    left: &InnerProduct,
    right: &InnerProduct,
) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(SsaError::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    if left.dim() != a.nrows() || right.dim() != a.ncols() {
        return Err(SsaError::ShapeMismatch {
            expected: a.shape(),
            found: (left.dim(), right.dim()),
        });
    }
    let map = |m: &DMatrix<f64>| right.apply(&left.apply(m).transpose());
    f_correlation(&map(a), &map(b))
}

/// `τ_r = 1 − Σ_{i≤r} λᵢ / ‖X‖²`, the share of trajectory energy outside the
/// leading `r` components.
pub fn tau_rank_closeness(component: &TimeSeries, window: usize, r: usize) -> Result<f64> {
    if r == 0 {
        return Err(SsaError::InvalidConfig("rank must be at least 1".into()));
    }
    let t = embed(component, window)?;
    let total = t.matrix().norm_squared();
    if total == 0.0 {
        return Err(SsaError::ZeroNorm);
    }
    let s = t.matrix().singular_values();
    let mut s: Vec<f64> = s.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let kept: f64 = s.iter().take(r).map(|v| v * v).sum();
    Ok((1.0 - kept / total).clamp(0.0, 1.0))
}

/// Characteristic roots estimated from a signal subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRoots {
    /// All eigenvalues of the shift matrix.
    pub roots: Vec<Complex<f64>>,
    /// `|arg μ| / 2π` for roots with non-negative imaginary part, ascending.
    pub frequencies: Vec<f64>,
    /// `|μ|` aligned with `frequencies`.
    pub moduli: Vec<f64>,
}

/// LS-ESPRIT: eigenvalues of the least-squares solution of `U↑ Φ = U↓`,
/// where `U↑`, `U↓` drop the last and first rows of the basis.
pub fn esprit_frequencies(basis: &DMatrix<f64>) -> Result<SignalRoots> {
    let (l, r) = basis.shape();
    if r == 0 || r >= l {
        return Err(SsaError::RankDeficientBasis { rank: r, expected: r.max(1) });
    }
    let up = basis.rows(0, l - 1).into_owned();
    let down = basis.rows(1, l - 1).into_owned();
    let tol = linalg::default_rank_tol(l - 1, r);
    let rank = linalg::thin_svd(&up).rank(tol);
    if rank < r {
        return Err(SsaError::RankDeficientBasis { rank, expected: r });
    }
    let shift = linalg::pinv(&up, tol) * down;
    let roots: Vec<Complex<f64>> = shift.complex_eigenvalues().iter().copied().collect();

    let mut pairs: Vec<(f64, f64)> = roots
        .iter()
        .filter(|z| z.im >= -1e-12 * z.norm().max(1.0))
        .map(|z| (z.arg().abs() / (2.0 * std::f64::consts::PI), z.norm()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SignalRoots {
        roots,
        frequencies: pairs.iter().map(|p| p.0).collect(),
        moduli: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Point sets `(vᵢ, vᵢ₊₁)` for consecutive pairs of vectors.
pub fn scatter_pairs(vectors: &[DVector<f64>]) -> Vec<Vec<(f64, f64)>> {
    vectors
        .windows(2)
        .map(|pair| pair[0].iter().zip(pair[1].iter()).map(|(&x, &y)| (x, y)).collect())
        .collect()
}
