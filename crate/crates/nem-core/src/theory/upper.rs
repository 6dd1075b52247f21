//! Non-existence thresholds: the ground-state bound and the pure-model
//! Kac-Rice bound.

use super::numeric::{bisect_predicate, bisect_root, golden_max, grid_golden_max};
use super::parisi::{e_star_parisi, PARISI_DEFAULT_GRID};
use super::TheoryError;
use crate::model::MixtureXi;

/// Left end of the domain of `Θ_p`.
pub fn theta_domain_start(p: usize) -> f64 {
    2.0 * ((p as f64 - 1.0) / p as f64).sqrt()
}

/// Complexity of critical points of the pure `p`-spin spherical model at
/// energy level `E`.
pub fn theta_p(e: f64, p: usize) -> Result<f64, TheoryError> {
    if p < 2 {
        return Err(TheoryError::Domain(format!("Θ_p needs p ≥ 2, got {p}")));
    }
    let pf = p as f64;
    let lo = theta_domain_start(p);
    if e < lo * (1.0 - 1e-14) {
        return Err(TheoryError::Domain(format!("E = {e} below the domain start {lo}")));
    }
    let r = pf / (pf - 1.0);
    let inner = (r * e * e / 4.0 - 1.0).max(0.0);
    Ok(0.5 * (pf - 1.0).ln() - ((pf - 2.0) / (pf - 1.0)) * e * e / 4.0 - r.sqrt() * (e / 4.0) * (r * e * e - 4.0).max(0.0).sqrt()
        + (inner.sqrt() + r.sqrt() * e / 2.0).ln())
}

/// Ground-state energy of the pure `p`-spin model as the zero of `Θ_p`.
/// For `p = 2` the complexity vanishes at the domain start, which is returned.
pub fn e_star_pure(p: usize) -> Result<f64, TheoryError> {
    let lo = theta_domain_start(p);
    if p == 2 {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    while theta_p(hi, p)? > 0.0 {
        hi *= 2.0;
    }
    bisect_root(|e| theta_p(e, p).unwrap_or(f64::NAN), lo, hi)
}

/// `(α_UB^(1), E_*(ξ_{>0}))` for a mixture with `ξ(0) > 0`.
pub fn alpha_ub1(xi: &MixtureXi) -> Result<(f64, f64), TheoryError> {
    if xi.xi0() <= 0.0 {
        return Err(TheoryError::Hypothesis("ground-state bound needs ξ(0) > 0".into()));
    }
    let shifted = xi.without_constant().map_err(|e| TheoryError::Hypothesis(e.to_string()))?;
    let e = e_star_parisi(&shifted, PARISI_DEFAULT_GRID)?;
    Ok((e.value * e.value / xi.xi0(), e.value))
}

/// Energy floor `ε₀(α)`: every point has `‖F‖² ≥ nξ(1)ε₀` once α exceeds α_UB^(1).
pub fn eps0(alpha: f64, alpha_ub1: f64, xi: &MixtureXi) -> f64 {
    let s = (1.0 - (alpha_ub1 / alpha).sqrt()).max(0.0);
    xi.xi0() / xi.total() * s * s
}

/// `φ1(c, p)` with the `s`-supremum in closed form and the `t`-supremum
/// numerical on `[0, 10√ξ0(1+c)]`.
pub fn phi1(c: f64, p: usize, xi0: f64) -> Result<f64, TheoryError> {
    if p < 3 || xi0 <= 0.0 || c < 0.0 {
        return Err(TheoryError::Domain(format!("φ1 needs p ≥ 3, ξ0 > 0, c ≥ 0 (p={p}, ξ0={xi0}, c={c})")));
    }
    let es = e_star_pure(p)?;
    let cap = 10.0 * xi0.sqrt() * (1.0 + c);
    let obj = |t: f64| c * t + theta_p(es + t, p).unwrap_or(f64::NEG_INFINITY);
    let (t_best, v) = grid_golden_max(obj, 0.0, cap, 2000);
    let eps = 1e-6 * cap;
    if t_best >= cap - cap / 1999.0 || obj(cap) >= obj(cap - eps) {
        return Err(TheoryError::CapTooSmall(cap));
    }
    Ok(c * es + 0.5 * c * c * xi0 + v)
}

/// `φ2(c, α)` in closed form; `xi1_total` is `ξ(1)`.
pub fn phi2(c: f64, alpha: f64, xi1_total: f64) -> f64 {
    let k = c * xi1_total.sqrt() / alpha.sqrt();
    // ½(√(k²+4) − k) without cancellation at large k
    let ts = 2.0 / ((k * k + 4.0).sqrt() + k);
    -c * (alpha * xi1_total).sqrt() * ts - alpha * (ts * ts - 1.0) / 2.0 + alpha * ts.ln()
}

fn ub2_gap(alpha: f64, p: usize, xi0: f64) -> Result<f64, TheoryError> {
    let xi1 = 1.0 + xi0;
    let f = |c: f64| -> Result<f64, TheoryError> { Ok(phi1(c, p, xi0)? + phi2(c, alpha, xi1) - 0.5 * c * c * xi1) };
    // log-grid over c, then golden refinement in log c
    let (lo, hi, m) = (-6.0f64, 4.0f64, 400);
    let mut best = (lo, f(10f64.powf(lo))?);
    for i in 1..=m {
        let l = lo + (hi - lo) * i as f64 / m as f64;
        let v = f(10f64.powf(l))?;
        if v < best.1 {
            best = (l, v);
        }
    }
    let step = (hi - lo) / m as f64;
    let (_, neg) = golden_max(|l| -f(10f64.powf(l)).unwrap_or(f64::INFINITY), best.0 - step, best.0 + step, 80);
    Ok(best.1.min(-neg))
}

/// Kac-Rice non-existence threshold for the pure model `ξ0 + t^p`.
pub fn alpha_ub2(xi0: f64, p: usize) -> Result<f64, TheoryError> {
    if p < 3 || xi0 <= 0.0 {
        return Err(TheoryError::Unsupported("the Kac-Rice bound covers pure models ξ0 + t^p with p ≥ 3 and ξ0 > 0".into()));
    }
    let mut err = None;
    let r = bisect_predicate(
        |a| match ub2_gap(a, p, xi0) {
            Ok(g) => g < -1e-12,
            Err(e) => {
                err.get_or_insert(e);
                false
            }
        },
        1e-9,
        super::second_moment::LB_ALPHA_MAX,
    );
    if let Some(e) = err {
        return Err(e);
    }
    match r {
        Err(TheoryError::BracketExhausted(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_boundary_value() {
        for p in [3usize, 4, 7] {
            let pf = p as f64;
            let v = theta_p(theta_domain_start(p), p).unwrap();
            assert!((v - (0.5 * (pf - 1.0).ln() - (pf - 2.0) / pf)).abs() < 1e-12);
        }
        let v3 = theta_p(theta_domain_start(3), 3).unwrap();
        assert!((v3 - 0.01324).abs() < 1e-4);
        assert!(theta_p(1.0, 3).is_err());
    }

    #[test]
    fn pure_ground_states() {
        assert!((e_star_pure(2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let e3 = e_star_pure(3).unwrap();
        assert!((e3 - 1.657).abs() < 1e-3, "{e3}");
        assert!(theta_p(e3, 3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn ub1_quadratic() {
        let (a, e) = alpha_ub1(&MixtureXi::parse("1,0,1").unwrap()).unwrap();
        assert!((e - 2f64.sqrt()).abs() < 1e-12);
        assert!((a - 2.0).abs() < 1e-12);
        let (a3, _) = alpha_ub1(&MixtureXi::parse("3,0,1").unwrap()).unwrap();
        assert!((a3 - 2.0 / 3.0).abs() < 1e-12);
        assert!(alpha_ub1(&MixtureXi::parse("0,0,1").unwrap()).is_err());
    }

    #[test]
    fn eps0_shape() {
        let xi = MixtureXi::parse("1,0,1").unwrap();
        assert_eq!(eps0(2.0, 2.0, &xi), 0.0);
        let mut prev = -1.0;
        for i in 0..50 {
            let v = eps0(0.5 + 0.2 * i as f64, 2.0, &xi);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn phi2_values() {
        assert!(phi2(0.0, 0.7, 2.0).abs() < 1e-15);
        let v = phi2(1.0, 1.0, 1.0);
        assert!((v + 0.790).abs() < 1e-3, "{v}");
        // direct maximization over t of the same expression
        let direct = (1..200000)
            .map(|i| {
                let t = i as f64 * 1e-5;
                -t - (t * t - 1.0) / 2.0 + t.ln()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((v - direct).abs() < 1e-8);
    }

    #[test]
    fn phi1_small_c_limit() {
        let v = phi1(1e-7, 3, 1.0).unwrap();
        assert!(v.abs() < 1e-5, "{v}");
    }
}
