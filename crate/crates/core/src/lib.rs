//! Singular spectrum analysis with oblique refinements.
//!
//! The crate covers Basic SSA, the restricted (L,R)-SVD, Iterative Oblique
//! SSA with optional sigma-correction, DerivSSA, separability diagnostics
//! (w-correlations, τ rank closeness, LS-ESPRIT) and a small harness of
//! simulated signals for reproducible experiments.

pub mod deriv;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod iossa;
pub mod lab;
pub mod linalg;
pub mod oblique;
pub mod pipeline;
pub mod series;
pub mod ssa;

pub use error::{Result, SsaError};
pub use series::{diff_series, embed, hankelize, unembed, w_weights, TimeSeries, TrajectoryMatrix, WeightVector};
pub use ssa::{basic_ssa, group, nested_ossa, reconstruct, svd_decompose, Grouping, SsaResult};

pub use nalgebra::{DMatrix, DVector};
