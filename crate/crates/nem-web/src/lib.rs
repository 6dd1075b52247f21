//! Browser bindings. Each export takes plain values and returns a JSON
//! string; the page in `www/` does the drawing. The same functions are
//! callable from Rust (the `*_json` versions) so they are tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use nem_core::harness::{run_single, theory_u, Algorithm, ExperimentConfig};
use nem_core::model::MixtureXi;
use nem_core::theory::{
    alpha_gd_threshold, alpha_hd, alpha_lb, alpha_tp, alpha_ub1, hd_ode, tp_final_u, OdeCurve, TpOptions,
    ODE_DEFAULT_STEP,
};

/// Largest dimension the page may simulate; keeps a click under a second.
pub const MAX_D: usize = 80;
/// Coarser than the CLI defaults so a click answers in about a second;
/// thresholds move by under 1e-3.
const LB_GRID: usize = 400;
const ODE_STEP: f64 = 1e-2;

// NaN and ∞ become `null` in JSON
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn parse_xi(xi: &str) -> Result<MixtureXi, String> {
    MixtureXi::parse(xi).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Thresholds {
    alpha_lb: Option<f64>,
    alpha_ub1: Option<f64>,
    alpha_gd: Option<f64>,
    alpha_hd: Option<f64>,
    alpha_tp: Option<f64>,
}

pub fn thresholds_json(xi: &str) -> Result<String, String> {
    let xi = parse_xi(xi)?;
    let ok = |r: Result<f64, _>| r.ok().and_then(finite);
    let hd = ok(alpha_hd(&xi, ODE_STEP));
    let tp = if xi.d1(0.0) == 0.0 { hd } else { ok(alpha_tp(&xi, TpOptions { step_h: ODE_STEP, ..Default::default() })) };
    let t = Thresholds {
        alpha_lb: ok(alpha_lb(&xi, LB_GRID)),
        alpha_ub1: ok(alpha_ub1(&xi).map(|r| r.0)),
        alpha_gd: ok(alpha_gd_threshold(&xi, 1.0)),
        alpha_hd: hd,
        alpha_tp: tp,
    };
    Ok(serde_json::to_string(&t).expect("thresholds serialize"))
}

#[derive(Serialize)]
struct Curves {
    hd: OdeCurve,
    two_phase: Option<OdeCurve>,
}

pub fn energy_curves_json(xi: &str, alpha: f64) -> Result<String, String> {
    let xi = parse_xi(xi)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(format!("α must lie in (0, 1), got {alpha}"));
    }
    let hd = hd_ode(alpha, &xi, 0.0, 0.5 * xi.xi0(), ODE_DEFAULT_STEP).map_err(|e| e.to_string())?;
    let two_phase = tp_final_u(alpha, &xi, TpOptions::default()).ok().map(|(_, c)| c);
    Ok(serde_json::to_string(&Curves { hd: hd.thinned(10), two_phase: two_phase.map(|c| c.thinned(10)) })
        .expect("curves serialize"))
}

#[derive(Serialize)]
struct SimPoint {
    t: f64,
    u: f64,
}

#[derive(Serialize)]
struct Simulation {
    n: usize,
    d: usize,
    final_u: f64,
    theory_u: Option<f64>,
    trace: Vec<SimPoint>,
}

pub fn simulate_json(xi: &str, d: usize, alpha: f64, algorithm: &str, delta: f64, seed: u64) -> Result<String, String> {
    if d > MAX_D {
        return Err(format!("d is capped at {MAX_D} in the browser"));
    }
    let mut cfg = ExperimentConfig::new(parse_xi(xi)?, d);
    cfg.algorithm = algorithm.parse::<Algorithm>()?;
    cfg.alpha_grid = vec![alpha];
    cfg.delta = delta;
    cfg.validate().map_err(|e| e.to_string())?;
    let sol = run_single(&cfg, alpha, seed).map_err(|e| e.to_string())?;
    let sim = Simulation {
        n: cfg.n_for(alpha),
        d,
        final_u: sol.final_u(),
        theory_u: finite(theory_u(&cfg, alpha)),
        trace: sol.trace.records.iter().map(|r| SimPoint { t: r.t, u: r.u }).collect(),
    };
    Ok(serde_json::to_string(&sim).expect("simulation serializes"))
}

/// Thresholds for the mixture `xi` (comma-separated coefficients).
#[wasm_bindgen]
pub fn thresholds(xi: &str) -> Result<String, JsValue> {
    thresholds_json(xi).map_err(|e| JsValue::from_str(&e))
}

/// Predicted energy curves `u(t)` at ratio `alpha`.
#[wasm_bindgen]
pub fn energy_curves(xi: &str, alpha: f64) -> Result<String, JsValue> {
    energy_curves_json(xi, alpha).map_err(|e| JsValue::from_str(&e))
}

/// One seeded run at dimension `d`; `algorithm` is gd, hd or two-phase.
#[wasm_bindgen]
pub fn simulate(xi: &str, d: usize, alpha: f64, algorithm: &str, delta: f64, seed: u32) -> Result<String, JsValue> {
    simulate_json(xi, d, alpha, algorithm, delta, seed as u64).map_err(|e| JsValue::from_str(&e))
}
