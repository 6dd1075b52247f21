use serde::{Serialize, Serializer};

use super::descent::{
    alpha_gd_threshold, alpha_hd, alpha_tp, hd_bounds, hd_ode, rs_quantities, tp_final_u, OdeCurve, TpOptions,
    DEFAULT_AMP_MARGIN, ODE_DEFAULT_STEP,
};
use super::second_moment::{alpha_lb, LB_DEFAULT_GRID};
use super::upper::{alpha_ub1, alpha_ub2, eps0};
use super::TheoryError;
use crate::model::MixtureXi;

/// JSON has no infinities; non-finite values are written as strings.
pub(crate) fn num<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Clone, Debug)]
pub struct ReportOptions {
    pub lb_grid: usize,
    pub parisi_grid: usize,
    pub ode_step: f64,
    pub gd_c0: f64,
    pub amp_margin: f64,
    pub literal_remark: bool,
    /// Stride when sampling the ODE curve into the report.
    pub curve_stride: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            lb_grid: LB_DEFAULT_GRID,
            parisi_grid: super::parisi::PARISI_DEFAULT_GRID,
            ode_step: ODE_DEFAULT_STEP,
            gd_c0: 1.0,
            amp_margin: DEFAULT_AMP_MARGIN,
            literal_remark: false,
            curve_stride: 50,
        }
    }
}

/// Every scalar prediction for one mixture at one α. Fields whose
/// hypotheses fail are NaN and the reason is listed in `notes`.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub xi: MixtureXi,
    #[serde(serialize_with = "num")]
    pub alpha: f64,
    #[serde(serialize_with = "num")]
    pub alpha_lb: f64,
    #[serde(serialize_with = "num")]
    pub alpha_ub1: f64,
    #[serde(serialize_with = "num")]
    pub eps0: f64,
    #[serde(serialize_with = "num")]
    pub alpha_ub2: f64,
    #[serde(serialize_with = "num")]
    pub alpha_gd: f64,
    #[serde(serialize_with = "num")]
    pub alpha_hd: f64,
    #[serde(serialize_with = "num")]
    pub alpha_tp: f64,
    #[serde(serialize_with = "num")]
    pub e_star: f64,
    #[serde(serialize_with = "num")]
    pub q_rs: f64,
    #[serde(serialize_with = "num")]
    pub q0: f64,
    #[serde(serialize_with = "num")]
    pub q_star: f64,
    #[serde(serialize_with = "num")]
    pub gamma_star: f64,
    #[serde(serialize_with = "num")]
    pub u_rs: f64,
    #[serde(serialize_with = "num")]
    pub a_xi: f64,
    #[serde(serialize_with = "num")]
    pub u_lb: f64,
    #[serde(serialize_with = "num")]
    pub u_ub: f64,
    /// Hessian-descent final energy `u(1; α, ξ)`.
    #[serde(serialize_with = "num")]
    pub u_hd: f64,
    /// Two-phase final energy.
    #[serde(serialize_with = "num")]
    pub u_tp: f64,
    pub ode_curve: OdeCurve,
    pub notes: Vec<String>,
}

impl TheoryReport {
    pub fn compute(xi: &MixtureXi, alpha: f64, opts: &ReportOptions) -> Result<TheoryReport, TheoryError> {
        if !(alpha > 0.0) {
            return Err(TheoryError::Domain(format!("α must be positive, got {alpha}")));
        }
        let mut notes = Vec::new();
        let mut take = |name: &str, r: Result<f64, TheoryError>| match r {
            Ok(v) => v,
            Err(e) => {
                notes.push(format!("{name}: {e}"));
                f64::NAN
            }
        };
        let nan = f64::NAN;
        let a_lb = take("alpha_lb", alpha_lb(xi, opts.lb_grid));
        let (a_ub1, e_star) = match alpha_ub1(xi) {
            Ok(v) => v,
            Err(e) => {
                take("alpha_ub1", Err(e));
                (nan, nan)
            }
        };
        let a_ub2 = match xi.as_pure() {
            Some((x0, p)) if p >= 3 && x0 > 0.0 => take("alpha_ub2", alpha_ub2(x0, p)),
            _ => take("alpha_ub2", Err(TheoryError::Unsupported("pure models ξ0 + t^p only".into()))),
        };
        let a_gd = take("alpha_gd", alpha_gd_threshold(xi, opts.gd_c0));
        let a_hd = take("alpha_hd", alpha_hd(xi, opts.ode_step));
        let tp_opts = TpOptions { step_h: opts.ode_step, literal_remark: opts.literal_remark };
        let a_tp = take("alpha_tp", alpha_tp(xi, tp_opts));
        let rs = match rs_quantities(alpha, xi, opts.amp_margin) {
            Ok(r) => Some(r),
            Err(e) => {
                take("rs_quantities", Err(e));
                None
            }
        };
        let (u_lb, u_ub, a_xi) = match hd_bounds(alpha, xi) {
            Ok(b) => (b.u_lb, b.u_ub, b.a_xi),
            Err(e) => {
                take("hd_bounds", Err(e));
                (nan, nan, nan)
            }
        };
        let hd_curve = hd_ode(alpha, xi, 0.0, 0.5 * xi.xi0(), opts.ode_step);
        let u_hd = take("u_hd", hd_curve.as_ref().map(|c| c.final_u()).map_err(|e| e.clone()));
        let (u_tp, curve) = if rs.is_some() {
            match tp_final_u(alpha, xi, tp_opts) {
                Ok((u, c)) => (u, c),
                Err(e) => (take("u_tp", Err(e)), OdeCurve { t: vec![], u: vec![] }),
            }
        } else {
            // without an AMP phase the two-phase algorithm is Hessian descent
            (u_hd, hd_curve.clone().unwrap_or(OdeCurve { t: vec![], u: vec![] }))
        };
        Ok(TheoryReport {
            xi: xi.clone(),
            alpha,
            alpha_lb: a_lb,
            alpha_ub1: a_ub1,
            eps0: if a_ub1.is_finite() { eps0(alpha, a_ub1, xi) } else { nan },
            alpha_ub2: a_ub2,
            alpha_gd: a_gd,
            alpha_hd: a_hd,
            alpha_tp: a_tp,
            e_star,
            q_rs: rs.map_or(nan, |r| r.q_rs),
            q0: rs.map_or(nan, |r| r.q0),
            q_star: rs.map_or(nan, |r| r.q_star),
            gamma_star: rs.map_or(nan, |r| r.gamma_star),
            u_rs: rs.map_or(nan, |r| r.u_rs),
            a_xi,
            u_lb,
            u_ub,
            u_hd,
            u_tp,
            ode_curve: curve.thinned(opts.curve_stride),
            notes,
        })
    }

    /// Scalar fields as `(name, value)` pairs in a fixed order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("alpha", self.alpha),
            ("alpha_lb", self.alpha_lb),
            ("alpha_ub1", self.alpha_ub1),
            ("eps0", self.eps0),
            ("alpha_ub2", self.alpha_ub2),
            ("alpha_gd", self.alpha_gd),
            ("alpha_hd", self.alpha_hd),
            ("alpha_tp", self.alpha_tp),
            ("e_star", self.e_star),
            ("q_rs", self.q_rs),
            ("q0", self.q0),
            ("q_star", self.q_star),
            ("gamma_star", self.gamma_star),
            ("u_rs", self.u_rs),
            ("a_xi", self.a_xi),
            ("u_lb", self.u_lb),
            ("u_ub", self.u_ub),
            ("u_hd", self.u_hd),
            ("u_tp", self.u_tp),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_cubic_report() {
        let opts = ReportOptions { lb_grid: 1000, ode_step: 4e-3, ..Default::default() };
        let r = TheoryReport::compute(&MixtureXi::parse("1,0,0,1").unwrap(), 0.5, &opts).unwrap();
        assert!(r.alpha_lb <= r.alpha_ub1);
        assert!(r.alpha_hd.is_finite() && r.alpha_tp == r.alpha_hd);
        assert!(r.q_rs.is_nan(), "AMP quantities need ξ'(0) > 0");
        assert!(r.u_lb <= r.u_hd + 1e-3 && r.u_hd <= r.u_ub + 1e-3);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"q_rs\":\"nan\""));
    }
}
