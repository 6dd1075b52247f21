//! Asymptotic predictions: existence and non-existence thresholds, the
//! ground-state energy, the Hessian spectral edge, the Hessian-descent
//! energy curve, the two-phase quantities and AMP state evolution.

mod descent;
pub mod numeric;
mod parisi;
mod report;
mod second_moment;
mod spectrum;
mod upper;

pub use descent::{
    alpha_gd_threshold, alpha_hd, alpha_tp, amp_state_evolution, amp_target, gamma_star, hd_bounds, hd_final_u, hd_ode,
    q0, q_rs, rs_quantities, state_evolution, tp_final_u, u_rs, u_rs_literal, HdBounds, OdeCurve, RsQuantities,
    TpOptions, DEFAULT_AMP_MARGIN, ODE_DEFAULT_STEP, Q_RS_CAP, U_TOL,
};
pub use parisi::{e_star_parisi, ParisiResult, PARISI_DEFAULT_GRID};
pub use report::{ReportOptions, TheoryReport};
pub(crate) use report::num as json_num;
pub use second_moment::{alpha_lb, psi, psi_sup, LB_ALPHA_MAX, LB_DEFAULT_GRID, LB_POSITIVITY, LB_R_MAX, LB_R_MIN};
pub use spectrum::{q_of_m, spectral_density, stieltjes, support_bracket, z_star};
pub use upper::{alpha_ub1, alpha_ub2, e_star_pure, eps0, phi1, phi2, theta_domain_start, theta_p};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("bracket: {0}")]
    Bracket(String),
    #[error("predicate never holds up to {0}")]
    BracketExhausted(f64),
    #[error("domain: {0}")]
    Domain(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("t-supremum reached the cap {0} without a decrease certificate")]
    CapTooSmall(f64),
    #[error("Stieltjes branch continuation hit coalescing roots")]
    BranchAmbiguity,
    #[error("ODE integration unstable at t = {t}: u = {u}")]
    OdeUnstable { t: f64, u: f64 },
}
