//! Random nonlinear equations on the sphere.
//!
//! A Gaussian map `F: R^d → R^n` with covariance `E[F(x)F(y)ᵀ] = ξ(⟨x,y⟩) I`
//! is sampled from i.i.d. coupling tensors; solvers look for `x` on the unit
//! sphere with small `‖F(x)‖²`, and the theory module predicts the energies
//! and thresholds they reach as `n, d → ∞` with `n/d → α`.

pub mod algorithms;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod par;
pub mod rmt;
pub mod rng;
pub mod theory;
