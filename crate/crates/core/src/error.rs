use thiserror::Error;

/// Errors raised by the decomposition pipelines and their building blocks.
#[derive(Debug, Error)]
pub enum SsaError {
    #[error("WindowOutOfRange: window length {window} must satisfy 1 < L < N = {len}")]
    WindowOutOfRange { window: usize, len: usize },

    #[error("SeriesTooShort: need at least {required} samples, got {len}")]
    SeriesTooShort { required: usize, len: usize },

    #[error("NonFiniteValue: sample {index} is {value}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("NotSymmetric: asymmetry {asymmetry:e} exceeds tolerance")]
    NotSymmetric { asymmetry: f64 },

    #[error("NegativeEigenvalue: eigenvalue {value:e} below -tol * max eigenvalue")]
    NegativeEigenvalue { value: f64 },

    #[error("RankDeficientBasis: numerical rank {rank} < {expected} columns")]
    RankDeficientBasis { rank: usize, expected: usize },

    #[error("InconsistentMetric: {0}")]
    InconsistentMetric(String),

    #[error("NonPositiveScale: scale factor {value} at position {index} must be > 0")]
    NonPositiveScale { index: usize, value: f64 },

    #[error("IndexOutOfRange: component index {index} exceeds component count {count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("OverlappingGroups: component index {index} appears in more than one group")]
    OverlappingGroups { index: usize },

    #[error("IncompletePartition: grouping must cover all {count} components")]
    IncompletePartition { count: usize },

    #[error("ShapeMismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("RankDeficientStack: stacked {side} basis has rank {rank} < {expected}")]
    RankDeficientStack {
        side: &'static str,
        rank: usize,
        expected: usize,
    },

    #[error("TooFewColumns: need at least 2 columns, got {cols}")]
    TooFewColumns { cols: usize },

    #[error("ZeroNorm: cannot normalise a zero-norm argument")]
    ZeroNorm,

    #[error("UnknownScenario: {0}")]
    UnknownScenario(String),

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("Parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SsaError {
    /// Short variant name, stable for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            SsaError::WindowOutOfRange { .. } => "WindowOutOfRange",
            SsaError::SeriesTooShort { .. } => "SeriesTooShort",
            SsaError::NonFiniteValue { .. } => "NonFiniteValue",
            SsaError::NotSymmetric { .. } => "NotSymmetric",
            SsaError::NegativeEigenvalue { .. } => "NegativeEigenvalue",
            SsaError::RankDeficientBasis { .. } => "RankDeficientBasis",
            SsaError::InconsistentMetric(_) => "InconsistentMetric",
            SsaError::NonPositiveScale { .. } => "NonPositiveScale",
            SsaError::IndexOutOfRange { .. } => "IndexOutOfRange",
            SsaError::OverlappingGroups { .. } => "OverlappingGroups",
            SsaError::IncompletePartition { .. } => "IncompletePartition",
            SsaError::ShapeMismatch { .. } => "ShapeMismatch",
            SsaError::RankDeficientStack { .. } => "RankDeficientStack",
            SsaError::TooFewColumns { .. } => "TooFewColumns",
            SsaError::ZeroNorm => "ZeroNorm",
            SsaError::UnknownScenario(_) => "UnknownScenario",
            SsaError::InvalidConfig(_) => "InvalidConfig",
            SsaError::Parse(_) => "Parse",
            SsaError::Io(_) => "Io",
            SsaError::Csv(_) => "Csv",
        }
    }

    /// Whether the error comes from validating user input rather than from the numerics.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            SsaError::WindowOutOfRange { .. }
                | SsaError::SeriesTooShort { .. }
                | SsaError::NonFiniteValue { .. }
                | SsaError::IndexOutOfRange { .. }
                | SsaError::OverlappingGroups { .. }
                | SsaError::IncompletePartition { .. }
                | SsaError::UnknownScenario(_)
                | SsaError::InvalidConfig(_)
                | SsaError::Parse(_)
                | SsaError::Io(_)
                | SsaError::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SsaError>;
