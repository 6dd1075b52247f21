use serde::{Deserialize, Serialize};

use super::{hessian_descent, AlgoError, HdOptions, RunTrace, Solution};
use crate::linalg::{axpy, dot, norm, norm_sq, scale};
use crate::model::{GaussianMap, ModelError};

/// Which derivative of ξ multiplies `⟨h^ℓ, h^{ℓ-1}⟩` in the second-order
/// memory term of the `m` update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnsagerCurvature {
    /// `ξ''(⟨m^ℓ, m^{ℓ-1}⟩)`: the term produced by the Hessians of `F_i`,
    /// which vanishes for affine ξ.
    #[default]
    Curvature,
    /// `ξ'(⟨m^ℓ, m^{ℓ-1}⟩)` as printed alongside the other two coefficients.
    Literal,
}

impl OnsagerCurvature {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "curvature" => Some(Self::Curvature),
            "literal" => Some(Self::Literal),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Curvature => "curvature",
            Self::Literal => "literal",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AmpOptions {
    /// Message-passing gain; the useful values are negative.
    pub gamma: f64,
    /// Number of iterations `L`.
    pub l: usize,
    pub onsager: OnsagerCurvature,
}

#[derive(Clone, Debug)]
pub struct AmpOutcome {
    pub m: Vec<f64>,
    pub h: Vec<f64>,
    pub trace: RunTrace,
}

impl AmpOutcome {
    pub fn radius_sq(&self) -> f64 {
        norm_sq(&self.m)
    }

    /// `‖F(m^L)‖²/(2n)`.
    pub fn final_u(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.u)
    }
}

fn diverged(ell: usize, m: &[f64]) -> AlgoError {
    AlgoError::Divergence { ell, norm_sq: norm_sq(m) }
}

/// First phase: `L` AMP iterations from the all-zero state.
///
/// ```text
/// h^{ℓ+1} = F(m^ℓ)/√n − γ B_ℓ h^{ℓ-1}
/// m^{ℓ+1} = (γ/√d) DF(m^ℓ)ᵀ h^ℓ − γ C_ℓ m^{ℓ-1} − γ² D_ℓ m^{ℓ-1}
/// ```
///
/// with `B = ξ'(o)/√α`, `C = √α ξ'(o)`, `D = κ(o)⟨h^ℓ, h^{ℓ-1}⟩`, where
/// `o = ⟨m^ℓ, m^{ℓ-1}⟩` and `κ` is chosen by [`OnsagerCurvature`]. Record `ℓ`
/// of the trace describes `m^ℓ` and `h^ℓ`; the memory terms vanish for
/// `ℓ ≤ 1` because the earlier iterates are zero.
pub fn amp_phase(map: &GaussianMap, opts: &AmpOptions) -> Result<AmpOutcome, AlgoError> {
    if opts.l < 2 {
        return Err(AlgoError::InvalidParameter(format!("AMP needs L ≥ 2 iterations, got {}", opts.l)));
    }
    if !opts.gamma.is_finite() {
        return Err(AlgoError::InvalidParameter(format!("γ must be finite, got {}", opts.gamma)));
    }
    let (n, d) = (map.n(), map.d());
    let xi = map.xi();
    let g = opts.gamma;
    let sa = map.alpha().sqrt();
    let (inv_sn, inv_sd) = (1.0 / (n as f64).sqrt(), 1.0 / (d as f64).sqrt());

    let mut m_prev = vec![0.0; d];
    let mut m = vec![0.0; d];
    let mut h_prev = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut trace = RunTrace::new("amp");

    for ell in 0..opts.l {
        let p = match map.point(&m) {
            Ok(p) => p,
            Err(ModelError::OutOfBall { .. }) => return Err(diverged(ell, &m)),
            Err(e) => return Err(e.into()),
        };
        let o = dot(&m, &m_prev);
        let hh = dot(&h, &h_prev);
        let b = xi.d1(o) / sa;
        let c = sa * xi.d1(o);
        let kappa = match opts.onsager {
            OnsagerCurvature::Curvature => xi.d2(o),
            OnsagerCurvature::Literal => xi.d1(o),
        };
        let dd = kappa * hh;
        trace.push(
            ell,
            ell as f64,
            norm_sq(&m),
            p.energy() / n as f64,
            &[("h_norm_sq", norm_sq(&h)), ("overlap", o), ("b", b), ("c", c), ("d", dd)],
        );

        let mut h_next = p.f.clone();
        scale(inv_sn, &mut h_next);
        axpy(-g * b, &h_prev, &mut h_next);

        let mut m_next = p.jac_t_apply(&h)?;
        scale(g * inv_sd, &mut m_next);
        axpy(-g * c - g * g * dd, &m_prev, &mut m_next);

        if !m_next.iter().chain(&h_next).all(|v| v.is_finite()) {
            return Err(diverged(ell + 1, &m_next));
        }
        m_prev = std::mem::replace(&mut m, m_next);
        h_prev = std::mem::replace(&mut h, h_next);
    }

    let (_, e) = match map.eval(&m) {
        Ok(v) => v,
        Err(ModelError::OutOfBall { .. }) => return Err(diverged(opts.l, &m)),
        Err(e) => return Err(e.into()),
    };
    trace.push(
        opts.l,
        opts.l as f64,
        norm_sq(&m),
        e / n as f64,
        &[("h_norm_sq", norm_sq(&h)), ("overlap", dot(&m, &m_prev))],
    );
    Ok(AmpOutcome { m, h, trace })
}

#[derive(Clone, Debug)]
pub struct TwoPhaseOptions {
    pub delta: f64,
    pub gamma: f64,
    pub l: usize,
    pub seed: u64,
    pub onsager: OnsagerCurvature,
    /// Passed through to the Hessian-descent phase.
    pub tol_factor: f64,
    pub max_lanczos: Option<usize>,
}

impl TwoPhaseOptions {
    pub fn new(delta: f64, gamma: f64, l: usize, seed: u64) -> Self {
        TwoPhaseOptions { delta, gamma, l, seed, onsager: OnsagerCurvature::default(), tol_factor: 1.0, max_lanczos: None }
    }
}

/// AMP to reach `m^L`, then Hessian descent from `m^L` restricted to the
/// hyperplane orthogonal to it. Phase-two records carry `phase = 2`.
///
/// `γ = 0` leaves `m^L = 0` and reduces to plain Hessian descent from the
/// origin; `‖m^L‖ ≥ 1` skips phase two and returns `m^L/‖m^L‖`.
pub fn two_phase(map: &GaussianMap, opts: &TwoPhaseOptions) -> Result<Solution, AlgoError> {
    let amp = amp_phase(map, &AmpOptions { gamma: opts.gamma, l: opts.l, onsager: opts.onsager })?;
    let mut trace = amp.trace;
    trace.algorithm = "two-phase".into();
    let r = norm_sq(&amp.m);
    let mut hd = HdOptions::new(opts.delta, opts.seed);
    hd.tol_factor = opts.tol_factor;
    hd.max_lanczos = opts.max_lanczos;

    if r >= 1.0 {
        let mut x = amp.m;
        scale(1.0 / r.sqrt(), &mut x);
        let (_, e) = map.eval(&x)?;
        let step = trace.last().map_or(0, |t| t.step + 1);
        trace.push(step, step as f64, 1.0, e / map.n() as f64, &[("normalized", 1.0), ("phase", 1.0)]);
        return Ok(Solution { x, trace });
    }
    if r > 0.0 {
        hd.start = Some(amp.m.clone());
        hd.extras = vec![amp.m];
    }
    let s = hessian_descent(map, &hd)?;
    trace.extend_phase(s.trace, 2.0);
    debug_assert!((norm(&s.x) - 1.0).abs() < 1e-9);
    Ok(Solution { x: s.x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureXi;

    fn opts(gamma: f64, l: usize) -> AmpOptions {
        AmpOptions { gamma, l, onsager: OnsagerCurvature::Curvature }
    }

    #[test]
    fn first_message_is_scaled_map_at_origin() {
        let map = GaussianMap::sample(&MixtureXi::parse("2,1,0,1").unwrap(), 30, 60, 4).unwrap();
        let a = amp_phase(&map, &opts(-0.5, 3)).unwrap();
        let (f0, _) = map.eval(&vec![0.0; 60]).unwrap();
        let r1 = &a.trace.records[1];
        let want = norm_sq(&f0) / 30.0;
        assert!((r1.aux["h_norm_sq"] - want).abs() < 1e-12);
        assert_eq!(a.trace.records[1].radius_sq, 0.0);
        for r in &a.trace.records[..2] {
            assert_eq!((r.aux["b"] * r.aux["overlap"], r.aux["d"]), (0.0, 0.0));
        }
    }

    #[test]
    fn zero_gain_keeps_m_at_origin() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,1,1").unwrap(), 10, 20, 2).unwrap();
        let a = amp_phase(&map, &opts(0.0, 6)).unwrap();
        assert!(a.m.iter().all(|v| *v == 0.0));
        assert!(a.trace.records.iter().all(|r| r.radius_sq == 0.0));
    }

    #[test]
    fn short_runs_rejected() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,1").unwrap(), 5, 10, 2).unwrap();
        assert!(matches!(amp_phase(&map, &opts(-1.0, 1)), Err(AlgoError::InvalidParameter(_))));
    }

    #[test]
    fn huge_gain_reports_divergence() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,1,1").unwrap(), 20, 40, 2).unwrap();
        match amp_phase(&map, &opts(-50.0, 10)) {
            Err(AlgoError::Divergence { ell, .. }) => assert!(ell >= 2),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_gain_two_phase_is_hessian_descent() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,0,0,1").unwrap(), 8, 16, 5).unwrap();
        let tp = two_phase(&map, &TwoPhaseOptions::new(0.1, 0.0, 3, 9)).unwrap();
        let hd = hessian_descent(&map, &HdOptions::new(0.1, 9)).unwrap();
        assert_eq!(tp.x, hd.x);
        assert_eq!(tp.final_u(), hd.final_u());
    }

    #[test]
    fn phase_two_stays_orthogonal_to_amp_output() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,1,0,1").unwrap(), 20, 50, 6).unwrap();
        let amp = amp_phase(&map, &opts(-0.4, 8)).unwrap();
        let tp = two_phase(&map, &TwoPhaseOptions::new(0.05, -0.4, 8, 1)).unwrap();
        let r = amp.radius_sq();
        assert!(r > 0.0 && r < 1.0);
        // x^K = m^L + w with w ⟂ m^L, so ⟨x, m^L⟩/‖x‖ is the normalized start
        let proj = dot(&tp.x, &amp.m);
        let last = tp.trace.records.iter().rev().find(|r| !r.aux.contains_key("normalized")).unwrap();
        assert!((proj - r / last.radius_sq.sqrt()).abs() < 1e-9);
        assert!(tp.trace.records.iter().any(|r| r.aux.get("phase") == Some(&2.0)));
    }
}
