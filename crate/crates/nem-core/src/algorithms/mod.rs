//! Solvers: projected gradient descent, Hessian descent and the two-phase
//! AMP + constrained Hessian descent.

mod amp;
mod gd;
mod hessian;
mod trace;

pub use amp::{amp_phase, two_phase, AmpOptions, AmpOutcome, OnsagerCurvature, TwoPhaseOptions};
pub use gd::{gradient_descent, GdOptions};
pub use hessian::{hessian_descent, min_eig_direction, min_eig_direction_at, EigenDirection, HdOptions};
pub use trace::{RunTrace, TraceParseError, TraceRecord, TRACE_SCHEMA};

use thiserror::Error;

use crate::linalg::LanczosError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgoError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
    #[error("AMP diverged at iteration {ell} (‖m‖² = {norm_sq:.3e})")]
    Divergence { ell: usize, norm_sq: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Result of a solver: the final point on the unit sphere and its trace.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub trace: RunTrace,
}

impl Solution {
    /// Energy per equation at the returned point.
    pub fn final_u(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.u)
    }
}
