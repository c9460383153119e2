//! Time series, the trajectory (Hankel) embedding and its inverse.

use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Result, SsaError};

/// Ordered finite real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    /// Validates that every sample is finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SsaError::NonFiniteValue { index, value });
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Elementwise sum; panics on length mismatch.
    pub fn add(&self, other: &TimeSeries) -> TimeSeries {
        assert_eq!(self.len(), other.len(), "series length mismatch");
        TimeSeries::from_vec_unchecked(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Elementwise difference; panics on length mismatch.
    pub fn sub(&self, other: &TimeSeries) -> TimeSeries {
        assert_eq!(self.len(), other.len(), "series length mismatch");
        TimeSeries::from_vec_unchecked(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &TimeSeries) -> f64 {
        assert_eq!(self.len(), other.len(), "series length mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = SsaError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

/// An `L x K` matrix tagged with whether it is exactly Hankel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    entries: DMatrix<f64>,
    is_hankel: bool,
}

impl TrajectoryMatrix {
    pub fn window(&self) -> usize {
        self.entries.nrows()
    }

    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_hankel(&self) -> bool {
        self.is_hankel
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Length of the series this matrix embeds (`L + K - 1`).
    pub fn series_len(&self) -> usize {
        self.window() + self.k() - 1
    }
}

impl Deref for TrajectoryMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

fn check_window(len: usize, window: usize) -> Result<()> {
    if window <= 1 || window >= len {
        return Err(SsaError::WindowOutOfRange { window, len });
    }
    Ok(())
}

/// Builds the `L`-trajectory matrix; column `j` is `(x_j, ..., x_{j+L-1})`.
pub fn embed(series: &TimeSeries, window: usize) -> Result<TrajectoryMatrix> {
    check_window(series.len(), window)?;
    let k = series.len() - window + 1;
    let x = series.values();
    Ok(TrajectoryMatrix {
        entries: DMatrix::from_fn(window, k, |i, j| x[i + j]),
        is_hankel: true,
    })
}

/// Antidiagonal sums together with the exact integer cell counts.
fn antidiagonal_means(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let n = rows + cols - 1;
    let mut sums = vec![0.0; n];
    for j in 0..cols {
        for i in 0..rows {
            sums[i + j] += m[(i, j)];
        }
    }
    let weights = weight_counts(n, rows, cols);
    sums.iter()
        .zip(weights)
        .map(|(s, w)| s / w as f64)
        .collect()
}

fn weight_counts(n: usize, rows: usize, cols: usize) -> Vec<usize> {
    (1..=n)
        .map(|idx| idx.min(rows).min(cols).min(n + 1 - idx))
        .collect()
}

/// Orthogonal (Frobenius) projection onto Hankel matrices of the same shape.
pub fn hankelize(m: &DMatrix<f64>) -> TrajectoryMatrix {
    let means = antidiagonal_means(m);
    TrajectoryMatrix {
        entries: DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| means[i + j]),
        is_hankel: true,
    }
}

/// Diagonal averaging: the series whose trajectory matrix is `hankelize(m)`.
pub fn unembed(m: &DMatrix<f64>) -> TimeSeries {
    TimeSeries::from_vec_unchecked(antidiagonal_means(m))
}

/// Multiplicity of each sample in the `L`-trajectory matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(Vec<usize>);

impl WeightVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `Σ w_n y_n z_n`.
    pub fn inner(&self, y: &[f64], z: &[f64]) -> f64 {
        assert_eq!(y.len(), self.0.len());
        assert_eq!(z.len(), self.0.len());
        self.0
            .iter()
            .zip(y.iter().zip(z))
            .map(|(&w, (a, b))| w as f64 * a * b)
            .sum()
    }
}

/// `w_n = min(n, L, K, N - n + 1)`.
pub fn w_weights(len: usize, window: usize) -> Result<WeightVector> {
    check_window(len, window)?;
    Ok(WeightVector(weight_counts(len, window, len - window + 1)))
}

/// First differences `x_{n+1} - x_n`.
pub fn diff_series(series: &TimeSeries) -> Result<TimeSeries> {
    if series.len() < 2 {
        return Err(SsaError::SeriesTooShort {
            required: 2,
            len: series.len(),
        });
    }
    Ok(TimeSeries::from_vec_unchecked(
        series.windows(2).map(|w| w[1] - w[0]).collect(),
    ))
}
