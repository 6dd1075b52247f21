use super::numeric::{bisect_predicate, grid_golden_max};
use super::TheoryError;
use crate::model::MixtureXi;

pub const LB_ALPHA_MAX: f64 = 20.0;
pub const LB_R_MIN: f64 = 1e-4;
pub const LB_R_MAX: f64 = 1.0 - 1e-6;
pub const LB_POSITIVITY: f64 = 1e-10;
pub const LB_DEFAULT_GRID: usize = 4000;

fn check_hypothesis(xi: &MixtureXi) -> Result<(), TheoryError> {
    if xi.coeff(1) != 0.0 || xi.coeff(2) != 0.0 {
        return Err(TheoryError::Hypothesis("second-moment bound needs ξ'(0) = ξ''(0) = 0".into()));
    }
    if xi.total() - xi.xi0() <= 0.0 {
        return Err(TheoryError::Hypothesis("second-moment bound needs a non-constant ξ".into()));
    }
    Ok(())
}

fn psi_unchecked(r: f64, alpha: f64, xi: &MixtureXi) -> f64 {
    let x0 = xi.xi0();
    let x1 = xi.total();
    let xr = xi.value(r);
    let rho = (xr - x0) / (x1 - x0);
    // the last two terms combined, so that Ψ(0) = 0 exactly
    0.5 * (1.0 - r * r).ln() - 0.5 * alpha * (1.0 - rho * rho).ln()
        + alpha * x0 * (xr - x0) / ((x1 - x0) * (x1 + xr - 2.0 * x0))
}

/// Second-moment exponent `Ψ(r; α, ξ)` for an overlap `r ∈ [0, 1)`.
pub fn psi(r: f64, alpha: f64, xi: &MixtureXi) -> Result<f64, TheoryError> {
    check_hypothesis(xi)?;
    if !(0.0..1.0).contains(&r) {
        return Err(TheoryError::Domain(format!("overlap r = {r} outside [0, 1)")));
    }
    Ok(psi_unchecked(r, alpha, xi))
}

/// `sup_r Ψ(r; α, ξ)` over the interior grid with golden refinement.
pub fn psi_sup(alpha: f64, xi: &MixtureXi, grid_n: usize) -> (f64, f64) {
    grid_golden_max(|r| psi_unchecked(r, alpha, xi), LB_R_MIN, LB_R_MAX, grid_n)
}

/// Existence threshold from the second-moment method: the smallest α where
/// `sup_r Ψ > 0`. Returns `+∞` if that does not happen below 20.
pub fn alpha_lb(xi: &MixtureXi, grid_n: usize) -> Result<f64, TheoryError> {
    check_hypothesis(xi)?;
    match bisect_predicate(|a| psi_sup(a, xi, grid_n).1 > LB_POSITIVITY, 0.0, LB_ALPHA_MAX) {
        Ok(a) => Ok(a),
        Err(TheoryError::BracketExhausted(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure_psi(r: f64, alpha: f64, xi0: f64, p: i32) -> f64 {
        let rp = r.powi(p);
        0.5 * (1.0 - r * r).ln() - 0.5 * alpha * (1.0 - rp * rp).ln() + alpha * xi0 * rp / (1.0 + rp)
    }

    #[test]
    fn vanishes_at_zero() {
        let xi = MixtureXi::pure(1.3, 3).unwrap();
        assert_eq!(psi(0.0, 0.7, &xi).unwrap(), 0.0);
    }

    #[test]
    fn agrees_with_pure_form() {
        let xi = MixtureXi::pure(1.0, 3).unwrap();
        let a = psi(0.5, 0.3, &xi).unwrap();
        assert!((a - pure_psi(0.5, 0.3, 1.0, 3)).abs() < 1e-14);
    }

    #[test]
    fn curvature_at_origin_is_minus_one() {
        let xi = MixtureXi::pure(2.0, 4).unwrap();
        let h = 1e-3;
        let second = (psi_unchecked(h, 0.4, &xi) - 2.0 * psi(0.0, 0.4, &xi).unwrap() + psi_unchecked(-h, 0.4, &xi)) / (h * h);
        assert!((second + 1.0).abs() < 1e-3);
    }

    #[test]
    fn hypothesis_enforced() {
        let xi = MixtureXi::parse("1,1,0,1").unwrap();
        assert!(psi(0.2, 0.1, &xi).is_err());
        assert!(alpha_lb(&xi, 100).is_err());
        assert!(psi(1.0, 0.1, &MixtureXi::pure(1.0, 3).unwrap()).is_err());
    }

    #[test]
    fn lower_threshold_grows_as_noise_shrinks() {
        let mut prev = 0.0;
        for xi0 in [4.0, 2.0, 1.0] {
            let a = alpha_lb(&MixtureXi::pure(xi0, 3).unwrap(), 1000).unwrap();
            assert!(a > prev, "ξ0={xi0}: {a} ≤ {prev}");
            prev = a;
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        let xi = MixtureXi::pure(2.0 * 50f64.ln(), 50).unwrap();
        let a = alpha_lb(&xi, 4000).unwrap();
        let b = alpha_lb(&xi, 8000).unwrap();
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}
