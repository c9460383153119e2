//! Basic SSA: embedding, SVD, grouping and diagonal averaging, plus the
//! nested oblique refinement of a grouped matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Result, SsaError};
use crate::linalg;
use crate::oblique::{lr_svd, InnerProduct, MatrixDecomposition};
use crate::series::{embed, unembed, TimeSeries, TrajectoryMatrix};

/// Disjoint groups of component indices (0-based internally).
///
/// Indices that belong to no group end up in the residual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
}

impl Grouping {
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for g in &groups {
            for &i in g {
                if !seen.insert(i) {
                    return Err(SsaError::OverlappingGroups { index: i + 1 });
                }
            }
        }
        Ok(Self { groups })
    }

    /// Builds from 1-based indices, matching how eigentriples are usually named.
    pub fn from_one_based(groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(groups.len());
        for g in groups {
            let mut out = Vec::with_capacity(g.len());
            for i in g {
                if i == 0 {
                    return Err(SsaError::Parse("component indices are 1-based".into()));
                }
                out.push(i - 1);
            }
            zero_based.push(out);
        }
        Self::new(zero_based)
    }

    /// One singleton group per component.
    pub fn elementary(count: usize) -> Self {
        Self {
            groups: (0..count).map(|i| vec![i]).collect(),
        }
    }

    /// A single group holding every component.
    pub fn all(count: usize) -> Self {
        Self {
            groups: vec![(0..count).collect()],
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Every referenced index must be below `count`.
    pub fn validate(&self, count: usize) -> Result<()> {
        for g in &self.groups {
            if let Some(&i) = g.iter().find(|&&i| i >= count) {
                return Err(SsaError::IndexOutOfRange {
                    index: i + 1,
                    count,
                });
            }
        }
        Ok(())
    }

    /// Every index in `0..count` is used exactly once.
    pub fn validate_partition(&self, count: usize) -> Result<()> {
        self.validate(count)?;
        let used: usize = self.groups.iter().map(Vec::len).sum();
        if used != count {
            return Err(SsaError::IncompletePartition { count });
        }
        Ok(())
    }

    /// Sorted union of all groups.
    pub fn union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.groups.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// Relabels the groups relative to their union: the partition of
    /// `{0, …, r-1}` induced on the nested matrix `Σ_{i ∈ union} X_i`.
    pub fn nested_partition(&self) -> Grouping {
        let union = self.union();
        let groups = self
            .groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|i| union.binary_search(i).expect("index in union"))
                    .collect()
            })
            .collect();
        Grouping { groups }
    }
}

/// `"1,2;3-4"`: groups separated by `;`, 1-based indices by `,`, ranges with `-`.
impl FromStr for Grouping {
    type Err = SsaError;

    fn from_str(s: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for part in s.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let mut g = Vec::new();
            for item in part.split(',') {
                let item = item.trim();
                let parse = |t: &str| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| SsaError::Parse(format!("bad component index '{t}'")))
                };
                match item.split_once('-') {
                    Some((a, b)) => {
                        let (a, b) = (parse(a)?, parse(b)?);
                        if a > b {
                            return Err(SsaError::Parse(format!("empty range '{item}'")));
                        }
                        g.extend(a..=b);
                    }
                    None => g.push(parse(item)?),
                }
            }
            groups.push(g);
        }
        if groups.is_empty() {
            return Err(SsaError::Parse("empty group specification".into()));
        }
        Grouping::from_one_based(groups)
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Ordinary SVD of a trajectory matrix, truncated at numerical rank.
pub fn svd_decompose(m: &DMatrix<f64>) -> MatrixDecomposition {
    let (rows, cols) = m.shape();
    MatrixDecomposition::ordinary(m, linalg::default_rank_tol(rows, cols))
}

/// `X_I = Σ_{i ∈ I} σᵢ Pᵢ Qᵢᵀ` for each group.
pub fn group(d: &MatrixDecomposition, g: &Grouping) -> Result<Vec<DMatrix<f64>>> {
    g.validate(d.len())?;
    Ok(g.groups().iter().map(|idx| d.sum_of(idx)).collect())
}

/// Diagonal averaging of each matrix.
pub fn reconstruct(matrices: &[DMatrix<f64>]) -> Result<Vec<TimeSeries>> {
    if let Some(first) = matrices.first() {
        let shape = first.shape();
        if let Some(bad) = matrices.iter().find(|m| m.shape() != shape) {
            return Err(SsaError::ShapeMismatch {
                expected: shape,
                found: bad.shape(),
            });
        }
    }
    Ok(matrices.iter().map(unembed).collect())
}

/// Output of a Basic SSA run.
#[derive(Debug, Clone)]
pub struct SsaResult {
    pub trajectory: TrajectoryMatrix,
    pub decomposition: MatrixDecomposition,
    pub grouping: Grouping,
    pub grouped_matrices: Vec<DMatrix<f64>>,
    pub components: Vec<TimeSeries>,
    /// Matrix of the ungrouped components; zero when the grouping is exhaustive.
    pub residual_matrix: DMatrix<f64>,
    pub residual: TimeSeries,
}

impl SsaResult {
    pub fn window(&self) -> usize {
        self.trajectory.window()
    }
}

/// Embedding, SVD, grouping and diagonal averaging.
pub fn basic_ssa(series: &TimeSeries, window: usize, g: &Grouping) -> Result<SsaResult> {
    let trajectory = embed(series, window)?;
    let decomposition = svd_decompose(trajectory.matrix());
    let grouped_matrices = group(&decomposition, g)?;
    let components = reconstruct(&grouped_matrices)?;
    let mut residual_matrix = trajectory.matrix().clone();
    for m in &grouped_matrices {
        residual_matrix -= m;
    }
    let residual = unembed(&residual_matrix);
    Ok(SsaResult {
        trajectory,
        decomposition,
        grouping: g.clone(),
        grouped_matrices,
        components,
        residual_matrix,
        residual,
    })
}

/// Refined decomposition of one grouped matrix.
#[derive(Debug, Clone)]
pub struct NestedResult {
    pub decomposition: MatrixDecomposition,
    pub grouped_matrices: Vec<DMatrix<f64>>,
    pub components: Vec<TimeSeries>,
}

/// Nested Oblique SSA: (L,R)-SVD of `y`, regrouped by a partition of its components.
pub fn nested_ossa(
    y: &DMatrix<f64>,
    left: &InnerProduct,
    right: &InnerProduct,
    partition: &Grouping,
) -> Result<NestedResult> {
    let decomposition = lr_svd(y, left, right)?;
    partition.validate_partition(decomposition.len())?;
    let grouped_matrices = group(&decomposition, partition)?;
    let components = reconstruct(&grouped_matrices)?;
    Ok(NestedResult {
        decomposition,
        grouped_matrices,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn two_sines(a1: f64, w1: f64, a2: f64, w2: f64, n: usize) -> (TimeSeries, TimeSeries) {
        let s = |a: f64, w: f64| {
            TimeSeries::new((1..=n).map(|i| a * (2.0 * PI * w * i as f64).sin()).collect()).unwrap()
        };
        (s(a1, w1), s(a2, w2))
    }

    #[test]
    fn parse_group_spec() {
        let g: Grouping = "1-4,7-11;5,6,12,13".parse().unwrap();
        assert_eq!(g.groups()[0], vec![0, 1, 2, 3, 6, 7, 8, 9, 10]);
        assert_eq!(g.groups()[1], vec![4, 5, 11, 12]);
        assert_eq!(g.to_string(), "1,2,3,4,7,8,9,10,11;5,6,12,13");
        assert!(matches!("1,2;2,3".parse::<Grouping>(), Err(SsaError::OverlappingGroups { index: 2 })));
        assert!("0,1".parse::<Grouping>().is_err());
        assert!("a".parse::<Grouping>().is_err());
        assert!("".parse::<Grouping>().is_err());
    }

    #[test]
    fn nested_partition_relabels() {
        // ET2,8 and ET3–6 → J1 = {1,6}, J2 = {2,3,4,5} (1-based)
        let g: Grouping = "2,8;3-6".parse().unwrap();
        let j = g.nested_partition();
        assert_eq!(g.union(), vec![1, 2, 3, 4, 5, 7]);
        assert_eq!(j.groups(), &[vec![0, 5], vec![1, 2, 3, 4]]);
    }

    #[test]
    fn constant_series_single_triple() {
        let c = 1.5;
        let (l, k) = (4, 7);
        let t = embed(&TimeSeries::new(vec![c; l + k - 1]).unwrap(), l).unwrap();
        let d = svd_decompose(t.matrix());
        assert_eq!(d.len(), 1);
        assert!((d.triples()[0].sigma - c * ((l * k) as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sine_numerical_rank() {
        let (x, _) = two_sines(1.0, 0.1, 0.0, 0.0, 150);
        assert_eq!(svd_decompose(embed(&x, 70).unwrap().matrix()).len(), 2);
    }

    #[test]
    fn elementary_and_full_grouping() {
        let (a, b) = two_sines(2.0, 1.0 / 12.0, 1.0, 0.1, 60);
        let x = a.add(&b);
        let t = embed(&x, 25).unwrap();
        let d = svd_decompose(t.matrix());
        let elementary = group(&d, &Grouping::elementary(d.len())).unwrap();
        let sum = elementary.iter().fold(DMatrix::zeros(25, 36), |acc, m| acc + m);
        assert!((sum - t.matrix()).norm() < 1e-10 * t.norm());
        let full = group(&d, &Grouping::all(d.len())).unwrap();
        assert!((&full[0] - t.matrix()).norm() < 1e-10 * t.norm());
        assert!(matches!(
            group(&d, &Grouping::new(vec![vec![0, 9]]).unwrap()),
            Err(SsaError::IndexOutOfRange { index: 10, count: 4 })
        ));
    }

    #[test]
    fn reconstruct_shape_mismatch() {
        let err = reconstruct(&[DMatrix::zeros(2, 3), DMatrix::zeros(3, 2)]).unwrap_err();
        assert!(matches!(err, SsaError::ShapeMismatch { .. }));
    }

    #[test]
    fn one_group_is_lossless() {
        let x = TimeSeries::new((0..40).map(|i| ((i * i) % 7) as f64 - 0.3 * i as f64).collect())
            .unwrap();
        let t = embed(&x, 15).unwrap();
        let d = svd_decompose(t.matrix());
        let r = basic_ssa(&x, 15, &Grouping::all(d.len())).unwrap();
        assert!(r.components[0].max_abs_diff(&x) < 1e-10);
        assert!(r.residual.iter().all(|v| v.abs() < 1e-10));
    }

    /// Periods 12 and 10 both divide L = K = 60: exactly orthogonal trajectory spaces.
    #[test]
    fn exactly_separable_sinusoids_recovered() {
        let (a, b) = two_sines(2.0, 1.0 / 12.0, 1.0, 0.1, 119);
        let x = a.add(&b);
        let g: Grouping = "1,2;3,4".parse().unwrap();
        let r = basic_ssa(&x, 60, &g).unwrap();
        assert_eq!(r.decomposition.len(), 4);
        assert!(r.components[0].max_abs_diff(&a) < 1e-9);
        assert!(r.components[1].max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn nested_identity_equals_group_reconstruct() {
        let (a, b) = two_sines(1.0, 0.065, 1.2, 0.06, 150);
        let x = a.add(&b);
        let r = basic_ssa(&x, 70, &"1-4".parse().unwrap()).unwrap();
        let y = &r.grouped_matrices[0];
        let partition: Grouping = "1,2;3,4".parse().unwrap();
        let nested = nested_ossa(
            y,
            &InnerProduct::identity(70),
            &InnerProduct::identity(81),
            &partition,
        )
        .unwrap();
        let direct = basic_ssa(&x, 70, &partition).unwrap();
        for (n, d) in nested.components.iter().zip(&direct.components) {
            assert!(n.max_abs_diff(d) < 1e-10);
        }
        let total = nested.components[0].add(&nested.components[1]);
        assert!(total.max_abs_diff(&unembed(y)) < 1e-10);
        assert!(matches!(
            nested_ossa(y, &InnerProduct::identity(70), &InnerProduct::identity(81), &"1,2".parse().unwrap()),
            Err(SsaError::IncompletePartition { count: 4 })
        ));
    }
}
