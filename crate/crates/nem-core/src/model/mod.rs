//! Mixture functions, sampled Gaussian maps and constraint subspaces.

mod map;
pub mod snapshot;
mod subspace;
pub(crate) mod tensor;
mod xi;

pub use map::{dense_bytes, GaussianMap, MapOptions, PointEval, Storage, DEFAULT_BALL_SLACK, DEFAULT_MEMORY_BUDGET};
pub use subspace::ConstraintSubspace;
pub use xi::MixtureXi;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("invalid size n={n}, d={d} (need n ≥ 1, d ≥ 2)")]
    InvalidSize { n: usize, d: usize },
    #[error("coupling storage needs {needed} bytes, budget is {budget}")]
    MemoryBudget { needed: u128, budget: u64 },
    #[error("point norm {norm:.6} outside the ball of radius {limit:.6}")]
    OutOfBall { norm: f64, limit: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector leaves the subspace (constraint component {residual:.3e})")]
    NotInSubspace { residual: f64 },
    #[error("constraint {index} is linearly dependent on the earlier ones")]
    DegenerateConstraint { index: usize },
    #[error("subspace anchor is zero")]
    ZeroAnchor,
    #[error("point has a non-zero coordinate {0} outside the declared support")]
    InvalidSupport(usize),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Shorthand for `xi_eval`.
pub fn xi_eval(xi: &MixtureXi, t: f64, order: usize) -> f64 {
    xi.eval(t, order)
}
