//! Hessian-descent energy curve, replica-symmetric AMP quantities and the
//! algorithmic thresholds built on them.

use serde::Serialize;

use super::numeric::{bisect_predicate, bisect_root, integrate};
use super::second_moment::LB_ALPHA_MAX;
use super::spectrum::z_star;
use super::TheoryError;
use crate::model::MixtureXi;

pub const ODE_DEFAULT_STEP: f64 = 1e-3;
/// Final energies at or below this count as zero when locating thresholds.
pub const U_TOL: f64 = 1e-6;
/// Search cap for the minimizer of `ξ(q)ξ'(q)/q`.
pub const Q_RS_CAP: f64 = 10.0;
/// Default distance kept below `q_RS` when picking the AMP target overlap.
pub const DEFAULT_AMP_MARGIN: f64 = 0.02;
const ALPHA_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct OdeCurve {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

impl OdeCurve {
    pub fn final_u(&self) -> f64 {
        *self.u.last().unwrap_or(&f64::NAN)
    }

    /// Every `stride`-th point plus the last one.
    pub fn thinned(&self, stride: usize) -> OdeCurve {
        let stride = stride.max(1);
        let last = self.t.len().saturating_sub(1);
        let idx: Vec<usize> = (0..self.t.len()).filter(|i| i % stride == 0 || *i == last).collect();
        OdeCurve { t: idx.iter().map(|&i| self.t[i]).collect(), u: idx.iter().map(|&i| self.u[i]).collect() }
    }
}

fn hd_rhs(alpha: f64, xi: &MixtureXi, q: f64, u: f64) -> f64 {
    let a = (2.0 * alpha * u.max(0.0) * xi.d2(q)).sqrt();
    -z_star(alpha, a, xi.d1(q)) / (2.0 * alpha)
}

/// Integrates `du/dt = −z_*(α; √(2αuξ''(q₀+t)), ξ'(q₀+t))/(2α)` from
/// `u(0) = u0` over `[0, 1 − q_start]` with classical RK4. Zero is
/// absorbing: a step that would cross it lands on it.
pub fn hd_ode(alpha: f64, xi: &MixtureXi, q_start: f64, u0: f64, step_h: f64) -> Result<OdeCurve, TheoryError> {
    if !(alpha > 0.0) || !(u0 >= 0.0) || !(0.0..1.0).contains(&q_start) || !(step_h > 0.0) {
        return Err(TheoryError::Domain(format!("hd_ode(α={alpha}, q={q_start}, u0={u0}, h={step_h})")));
    }
    let span = 1.0 - q_start;
    let steps = (span / step_h).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut t = vec![0.0; steps + 1];
    let mut u = vec![u0; steps + 1];
    let absorbing = alpha <= 1.0;
    for k in 0..steps {
        let tk = k as f64 * h;
        let uk = u[k];
        let next = if absorbing && uk == 0.0 {
            0.0
        } else {
            let f = |s: f64, v: f64| hd_rhs(alpha, xi, q_start + s, v);
            let k1 = f(tk, uk);
            let k2 = f(tk + 0.5 * h, uk + 0.5 * h * k1);
            let k3 = f(tk + 0.5 * h, uk + 0.5 * h * k2);
            let k4 = f(tk + h, uk + h * k3);
            uk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        if !next.is_finite() {
            return Err(TheoryError::OdeUnstable { t: tk + h, u: next });
        }
        t[k + 1] = tk + h;
        u[k + 1] = next.max(0.0);
    }
    Ok(OdeCurve { t, u })
}

/// `u(1; α, ξ)` for Hessian descent started at the origin.
pub fn hd_final_u(alpha: f64, xi: &MixtureXi, step_h: f64) -> Result<f64, TheoryError> {
    if alpha <= 0.0 {
        return Ok(0.0);
    }
    Ok(hd_ode(alpha, xi, 0.0, 0.5 * xi.xi0(), step_h)?.final_u())
}

fn threshold(mut final_u: impl FnMut(f64) -> Result<f64, TheoryError>) -> Result<f64, TheoryError> {
    let mut err = None;
    let r = bisect_predicate(
        |a| match final_u(a) {
            Ok(u) => u > U_TOL,
            Err(e) => {
                err.get_or_insert(e);
                true
            }
        },
        ALPHA_FLOOR,
        LB_ALPHA_MAX,
    );
    if let Some(e) = err {
        return Err(e);
    }
    match r {
        Err(TheoryError::BracketExhausted(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Smallest α where Hessian descent stops reaching zero energy. `0` when
/// `ξ'' ≡ 0` (the walk gains nothing), `∞` when `ξ(0) = 0`.
pub fn alpha_hd(xi: &MixtureXi, step_h: f64) -> Result<f64, TheoryError> {
    if xi.degree() < 2 {
        return Ok(0.0);
    }
    if xi.xi0() == 0.0 {
        return Ok(f64::INFINITY);
    }
    threshold(|a| hd_final_u(a, xi, step_h))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HdBounds {
    pub u_lb: f64,
    pub u_ub: f64,
    pub a_xi: f64,
}

/// Closed-form sandwich for the Hessian-descent energy and threshold.
pub fn hd_bounds(alpha: f64, xi: &MixtureXi) -> Result<HdBounds, TheoryError> {
    let x0 = xi.xi0();
    if x0 <= 0.0 {
        return Err(TheoryError::Hypothesis("Hessian-descent bounds need ξ(0) > 0".into()));
    }
    let root_int = integrate(|s| xi.d2(s).max(0.0).sqrt(), 0.0, 1.0, 1e-12);
    let part = |c: f64| {
        let v = (x0.sqrt() - c.sqrt() * root_int).max(0.0);
        0.5 * v * v
    };
    Ok(HdBounds { u_lb: part(1.0 / alpha), u_ub: part((1.0 - alpha).max(0.0) / alpha), a_xi: root_int * root_int / x0 })
}

fn check_rs_hypothesis(xi: &MixtureXi) -> Result<(), TheoryError> {
    if xi.xi0() <= 0.0 || xi.d1(0.0) <= 0.0 {
        return Err(TheoryError::Hypothesis("AMP quantities need ξ(0) > 0 and ξ'(0) > 0".into()));
    }
    Ok(())
}

/// Minimizer of `V(q) = ξ(q)ξ'(q)/q`; `∞` for affine ξ, capped at [`Q_RS_CAP`].
pub fn q_rs(xi: &MixtureXi) -> Result<f64, TheoryError> {
    check_rs_hypothesis(xi)?;
    if xi.is_affine() {
        return Ok(f64::INFINITY);
    }
    // sign of V'(q)·q²
    let dv = |q: f64| q * (xi.d1(q).powi(2) + xi.value(q) * xi.d2(q)) - xi.value(q) * xi.d1(q);
    if dv(Q_RS_CAP) <= 0.0 {
        return Ok(Q_RS_CAP);
    }
    bisect_root(dv, 0.0, Q_RS_CAP)
}

/// Unique positive root of `α = qξ'(q)/ξ(q)`; `∞` when the ratio never
/// reaches α (affine ξ with α ≥ 1).
pub fn q0(alpha: f64, xi: &MixtureXi) -> Result<f64, TheoryError> {
    check_rs_hypothesis(xi)?;
    if !(alpha > 0.0) {
        return Err(TheoryError::Domain(format!("q0 needs α > 0, got {alpha}")));
    }
    if xi.is_affine() {
        let (x0, x1) = (xi.xi0(), xi.coeff(1));
        return Ok(if alpha < 1.0 { alpha * x0 / (x1 * (1.0 - alpha)) } else { f64::INFINITY });
    }
    let g = |q: f64| q * xi.d1(q) / xi.value(q) - alpha;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(f64::INFINITY);
        }
    }
    bisect_root(g, 0.0, hi)
}

/// `γ_*(q, α) = −√(q̄/(ξ(q̄)ξ'(q̄)))` with `q̄ = q ∧ q0(α)`.
pub fn gamma_star(q: f64, alpha: f64, xi: &MixtureXi) -> Result<f64, TheoryError> {
    let qb = q.min(q0(alpha, xi)?);
    if !(qb > 0.0) || !qb.is_finite() {
        return Err(TheoryError::Domain(format!("γ_* needs a finite positive overlap, got {qb}")));
    }
    Ok(-(qb / (xi.value(qb) * xi.d1(qb))).sqrt())
}

/// `u_RS(q, α) = ½(√ξ(q) − √(qξ'(q)/α))₊²`.
pub fn u_rs(q: f64, alpha: f64, xi: &MixtureXi) -> f64 {
    let v = (xi.value(q).sqrt() - (q * xi.d1(q) / alpha).sqrt()).max(0.0);
    0.5 * v * v
}

/// The phase-one energy at `q = 1` as displayed with the extra factor two,
/// `½(√ξ(1) − √(2ξ'(1)/α))₊²`; kept for comparison only.
pub fn u_rs_literal(alpha: f64, xi: &MixtureXi) -> f64 {
    let v = (xi.total().sqrt() - (2.0 * xi.d1(1.0) / alpha).sqrt()).max(0.0);
    0.5 * v * v
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RsQuantities {
    pub q_rs: f64,
    pub q0: f64,
    pub q_star: f64,
    /// AMP target overlap actually used (see [`amp_target`]).
    pub q_target: f64,
    pub gamma_star: f64,
    /// Energy of the AMP output at `q_target`.
    pub u_rs: f64,
}

/// Overlap the AMP phase aims for: `q0` when it lies below `q_RS`, else
/// `q_RS − margin` (strictly inside the contraction region), never above 1.
pub fn amp_target(alpha: f64, xi: &MixtureXi, margin: f64) -> Result<f64, TheoryError> {
    let qr = q_rs(xi)?;
    let qz = q0(alpha, xi)?;
    let inner = if qr.is_finite() { if qr - margin > 0.0 { qr - margin } else { 0.5 * qr } } else { f64::INFINITY };
    Ok(qz.min(inner).min(1.0))
}

pub fn rs_quantities(alpha: f64, xi: &MixtureXi, margin: f64) -> Result<RsQuantities, TheoryError> {
    let qr = q_rs(xi)?;
    let qz = q0(alpha, xi)?;
    let qt = amp_target(alpha, xi, margin)?;
    Ok(RsQuantities { q_rs: qr, q0: qz, q_star: qr.min(qz), q_target: qt, gamma_star: gamma_star(qt, alpha, xi)?, u_rs: u_rs(qt, alpha, xi) })
}

#[derive(Clone, Copy, Debug)]
pub struct TpOptions {
    pub step_h: f64,
    /// Use the factor-two variant of the phase-one energy when `q_* ≥ 1`.
    pub literal_remark: bool,
}

impl Default for TpOptions {
    fn default() -> Self {
        TpOptions { step_h: ODE_DEFAULT_STEP, literal_remark: false }
    }
}

/// Predicted final energy of the two-phase algorithm together with the
/// phase-two curve (empty when `q_* ≥ 1`).
pub fn tp_final_u(alpha: f64, xi: &MixtureXi, opts: TpOptions) -> Result<(f64, OdeCurve), TheoryError> {
    if xi.d1(0.0) == 0.0 {
        let curve = hd_ode(alpha, xi, 0.0, 0.5 * xi.xi0(), opts.step_h)?;
        return Ok((curve.final_u(), curve));
    }
    let qs = q_rs(xi)?.min(q0(alpha, xi)?);
    if qs >= 1.0 {
        let u = if opts.literal_remark { u_rs_literal(alpha, xi) } else { u_rs(1.0, alpha, xi) };
        return Ok((u, OdeCurve { t: vec![0.0], u: vec![u] }));
    }
    let curve = hd_ode(alpha, xi, qs, u_rs(qs, alpha, xi), opts.step_h)?;
    Ok((curve.final_u(), curve))
}

/// Threshold of the two-phase algorithm. Reduces to [`alpha_hd`] when
/// `ξ'(0) = 0`, where the AMP phase stays at the origin.
pub fn alpha_tp(xi: &MixtureXi, opts: TpOptions) -> Result<f64, TheoryError> {
    if xi.d1(0.0) == 0.0 {
        return alpha_hd(xi, opts.step_h);
    }
    check_rs_hypothesis(xi)?;
    threshold(|a| Ok(tp_final_u(a, xi, opts)?.0))
}

/// `q_{ℓ+1} = γ²ξ(q_ℓ)ξ'(q_ℓ)`, `q_0 = 0`; returns `q_0..=q_L`.
pub fn state_evolution(gamma: f64, xi: &MixtureXi, l: usize) -> Vec<f64> {
    let g2 = gamma * gamma;
    let mut q = vec![0.0; l + 1];
    for i in 0..l {
        q[i + 1] = g2 * xi.value(q[i]) * xi.d1(q[i]);
    }
    q
}

/// Diagonal of the two-index recursion followed by the staggered iteration
/// (`h^{ℓ+1}` from `m^ℓ`, `m^{ℓ+1}` from `h^ℓ`): returns `(‖m^ℓ‖², ‖h^ℓ‖²)`
/// predictions for `ℓ = 0..=L`. Its limit is the fixed point of
/// [`state_evolution`], reached about twice as slowly.
pub fn amp_state_evolution(gamma: f64, xi: &MixtureXi, l: usize) -> Vec<(f64, f64)> {
    let g2 = gamma * gamma;
    let mut out = vec![(0.0, 0.0); l + 1];
    for i in 0..l {
        let (m, h) = out[i];
        out[i + 1] = (g2 * xi.d1(m) * h, xi.value(m));
    }
    out
}

/// `c₀ξ'(1)²/(ξ''(1)ξ(1)·max(log(ξ'''(1)/ξ''(1)), 1))`.
pub fn alpha_gd_threshold(xi: &MixtureXi, c0: f64) -> Result<f64, TheoryError> {
    let d2 = xi.d2(1.0);
    if d2 <= 0.0 {
        return Err(TheoryError::Domain("gradient-descent threshold needs ξ''(1) > 0".into()));
    }
    let d3 = xi.eval(1.0, 3);
    let lg = if d3 > 0.0 { (d3 / d2).ln().max(1.0) } else { 1.0 };
    Ok(c0 * xi.d1(1.0).powi(2) / (d2 * xi.total() * lg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(s: &str) -> MixtureXi {
        MixtureXi::parse(s).unwrap()
    }

    #[test]
    fn linear_mixture_keeps_initial_energy() {
        let c = hd_ode(0.3, &xi("1,1"), 0.0, 0.5, 1e-2).unwrap();
        assert!(c.u.iter().all(|&u| u == 0.5));
        assert_eq!(alpha_hd(&xi("1,1"), 1e-2).unwrap(), 0.0);
    }

    #[test]
    fn rk4_step_halving() {
        let x = xi("4,0,0,0,1");
        let a = hd_final_u(0.9, &x, 1e-3).unwrap();
        let b = hd_final_u(0.9, &x, 5e-4).unwrap();
        assert!(a > 0.01);
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn bounds_contain_ode() {
        for (s, alpha) in [("1,0,0,1", 0.5), ("1,0,0,0,1", 0.3), ("1,0,0,0,1", 0.8), ("2,0,1,1", 0.6)] {
            let x = xi(s);
            let u = hd_final_u(alpha, &x, 1e-3).unwrap();
            let b = hd_bounds(alpha, &x).unwrap();
            assert!(b.u_lb - 1e-3 <= u && u <= b.u_ub + 1e-3, "{s} α={alpha}: {} ≤ {u} ≤ {}", b.u_lb, b.u_ub);
        }
    }

    #[test]
    fn pure_model_a_value() {
        for p in [3usize, 4, 6] {
            let x = MixtureXi::pure(1.5, p).unwrap();
            let pf = p as f64;
            let a = hd_bounds(0.5, &x).unwrap().a_xi;
            assert!((a - 4.0 * (pf - 1.0) / (pf * 1.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn lower_bound_positive_part() {
        // √ξ0 ≤ √(1/α)∫√ξ'' exactly when α ≤ A
        let x = xi("1,0,0,1");
        let a = hd_bounds(0.5, &x).unwrap().a_xi;
        assert_eq!(hd_bounds(a * 0.99, &x).unwrap().u_lb, 0.0);
        assert!(hd_bounds(a * 1.01, &x).unwrap().u_lb > 0.0);
    }

    #[test]
    fn linear_q0_closed_form() {
        assert!((q0(0.2, &xi("1,1")).unwrap() - 0.25).abs() < 1e-15);
        assert!(q_rs(&xi("1,1")).unwrap().is_infinite());
        let x = xi("1,1,0,1");
        let z = q0(0.3, &x).unwrap();
        assert!(u_rs(z, 0.3, &x) < 1e-20);
    }

    #[test]
    fn gamma_is_negative() {
        let x = xi("1,1,0,1");
        for alpha in [0.1, 0.3, 0.6, 0.9] {
            let r = rs_quantities(alpha, &x, DEFAULT_AMP_MARGIN).unwrap();
            assert!(r.gamma_star < 0.0);
            assert!(r.q_target <= r.q_star);
        }
        assert!(rs_quantities(0.3, &xi("1,0,0,1"), 0.02).is_err());
    }

    #[test]
    fn q_rs_minimizes_v() {
        let x = xi("1,1,0,1");
        let q = q_rs(&x).unwrap();
        let v = |q: f64| x.value(q) * x.d1(q) / q;
        assert!(v(q) <= v(q * 0.99) && v(q) <= v(q * 1.01));
    }

    #[test]
    fn state_evolution_fixed_point() {
        let x = xi("1,1,0,1");
        let q = 0.8 * q_rs(&x).unwrap();
        let g = -(q / (x.value(q) * x.d1(q))).sqrt();
        let s = state_evolution(g, &x, 200);
        assert!((s[200] - q).abs() < 1e-8);
        let v = x.value(s[200]) * x.d1(s[200]) / s[200];
        assert!((1.0 / (g * g) - v).abs() < 1e-8);
        assert!(state_evolution(0.0, &x, 10).iter().all(|&q| q == 0.0));
        let lagged = amp_state_evolution(g, &x, 400);
        assert!((lagged[400].0 - q).abs() < 1e-8);
        assert!((lagged[400].1 - x.value(q)).abs() < 1e-8);
    }

    #[test]
    fn linear_two_phase_threshold() {
        let a = alpha_tp(&xi("1,1"), TpOptions::default()).unwrap();
        assert!((a - 0.5).abs() < 0.01, "{a}");
    }

    #[test]
    fn two_phase_dominates_hd() {
        let x = xi("1,1,0,1");
        let opts = TpOptions { step_h: 4e-3, ..Default::default() };
        let tp = alpha_tp(&x, opts).unwrap();
        let hd = alpha_hd(&x, 4e-3).unwrap();
        assert!(tp >= hd, "{tp} < {hd}");
    }

    #[test]
    fn gd_threshold_formula() {
        // ξ = 1 + t^p: ξ'(1)=p, ξ''(1)=p(p−1), ξ'''(1)=p(p−1)(p−2), ξ(1)=2
        for p in [3usize, 5, 12] {
            let pf = p as f64;
            let v = alpha_gd_threshold(&MixtureXi::pure(1.0, p).unwrap(), 1.0).unwrap();
            let expect = pf * pf / (pf * (pf - 1.0) * 2.0 * (pf - 2.0).ln().max(1.0));
            assert!((v - expect).abs() < 1e-12);
            let v2 = alpha_gd_threshold(&MixtureXi::pure(1.0, p).unwrap(), 2.5).unwrap();
            assert!((v2 - 2.5 * v).abs() < 1e-12);
        }
        assert!(alpha_gd_threshold(&xi("1,1"), 1.0).is_err());
    }
}
