use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::Serialize;
use thiserror::Error;

use super::config::{Algorithm, ConfigError, ExperimentConfig, GammaPolicy};
use crate::algorithms::{
    gradient_descent, hessian_descent, two_phase, AlgoError, GdOptions, HdOptions, RunTrace, Solution, TwoPhaseOptions,
};
use crate::linalg::mean_sd;
use crate::model::{GaussianMap, MapOptions, ModelError};
use crate::par::{map_indexed, with_jobs};
use crate::rng::derive_seed;
use crate::theory::{
    alpha_hd, alpha_lb, alpha_tp, alpha_ub1, amp_target, gamma_star, hd_final_u, json_num, tp_final_u, TheoryError,
    TpOptions, LB_DEFAULT_GRID, ODE_DEFAULT_STEP,
};

pub const PHASE_SCHEMA: &str = "phase-diagram.v1";
pub const RUNS_SCHEMA: &str = "runs.v1";
const ALGO_STREAM: u64 = 0x616c67;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// Thresholds repeated on every row; NaN where a hypothesis fails.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThresholdSet {
    #[serde(serialize_with = "json_num")]
    pub alpha_lb: f64,
    #[serde(serialize_with = "json_num")]
    pub alpha_ub1: f64,
    #[serde(serialize_with = "json_num")]
    pub alpha_hd: f64,
    #[serde(serialize_with = "json_num")]
    pub alpha_tp: f64,
}

impl ThresholdSet {
    pub fn unavailable() -> Self {
        ThresholdSet { alpha_lb: f64::NAN, alpha_ub1: f64::NAN, alpha_hd: f64::NAN, alpha_tp: f64::NAN }
    }

    pub fn compute(xi: &crate::model::MixtureXi) -> Self {
        let nan = |r: Result<f64, TheoryError>| r.unwrap_or(f64::NAN);
        let hd = nan(alpha_hd(xi, ODE_DEFAULT_STEP));
        ThresholdSet {
            alpha_lb: nan(alpha_lb(xi, LB_DEFAULT_GRID)),
            alpha_ub1: nan(alpha_ub1(xi).map(|r| r.0)),
            alpha_hd: hd,
            // without a linear part the AMP phase is idle and the thresholds coincide
            alpha_tp: if xi.d1(0.0) == 0.0 { hd } else { nan(alpha_tp(xi, TpOptions::default())) },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub alpha_index: usize,
    pub seed_index: usize,
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(serialize_with = "json_num")]
    pub final_u: f64,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<RunTrace>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseDiagramRow {
    pub alpha: f64,
    pub n: usize,
    pub runs: usize,
    pub failures: usize,
    #[serde(serialize_with = "json_num")]
    pub mean_final_u: f64,
    #[serde(serialize_with = "json_num")]
    pub sd_final_u: f64,
    #[serde(serialize_with = "json_num")]
    pub theory_u: f64,
    #[serde(flatten)]
    pub thresholds: ThresholdSet,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub schema: &'static str,
    pub config: ExperimentConfig,
    pub rows: Vec<PhaseDiagramRow>,
    pub runs: Vec<RunRecord>,
}

/// Seed of run `(alpha_index, seed_index)`: independent of scheduling.
pub fn run_seed(master: u64, alpha_index: usize, seed_index: usize) -> u64 {
    derive_seed(master, &[alpha_index as u64, seed_index as u64])
}

/// AMP gain for a grid point under the configured policy. `auto` with
/// `ξ'(0) = 0` gives 0: the AMP phase would stay at the origin anyway.
pub fn gamma_for(cfg: &ExperimentConfig, alpha: f64) -> Result<f64, TheoryError> {
    match cfg.gamma {
        GammaPolicy::Explicit(g) => Ok(g),
        GammaPolicy::Auto if cfg.xi.d1(0.0) == 0.0 => Ok(0.0),
        GammaPolicy::Auto => gamma_star(amp_target(alpha, &cfg.xi, cfg.amp_margin)?, alpha, &cfg.xi),
    }
}

/// Predicted final energy for the configured algorithm (NaN for gradient
/// descent, which has no energy prediction).
pub fn theory_u(cfg: &ExperimentConfig, alpha: f64) -> f64 {
    let r = match cfg.algorithm {
        Algorithm::Gd => return f64::NAN,
        Algorithm::Hd => hd_final_u(alpha, &cfg.xi, ODE_DEFAULT_STEP),
        Algorithm::TwoPhase => tp_final_u(alpha, &cfg.xi, TpOptions::default()).map(|r| r.0),
    };
    r.unwrap_or(f64::NAN)
}

/// One run: sample the map with `seed`, run the configured algorithm.
pub fn run_single(cfg: &ExperimentConfig, alpha: f64, seed: u64) -> Result<Solution, RunError> {
    let opts = MapOptions { storage: cfg.storage, ..Default::default() };
    let map = GaussianMap::sample_with(&cfg.xi, cfg.n_for(alpha), cfg.d, seed, opts)?;
    let algo_seed = derive_seed(seed, &[ALGO_STREAM]);
    Ok(match cfg.algorithm {
        Algorithm::Gd => gradient_descent(
            &map,
            &GdOptions { eta: cfg.eta, max_iters: cfg.max_iters, seed: algo_seed, stop_energy: cfg.stop_energy, start: None },
        )?,
        Algorithm::Hd => {
            let mut o = HdOptions::new(cfg.delta, algo_seed);
            o.tol_factor = cfg.tol_factor;
            hessian_descent(&map, &o)?
        }
        Algorithm::TwoPhase => {
            let mut o = TwoPhaseOptions::new(cfg.delta, gamma_for(cfg, alpha)?, cfg.l, algo_seed);
            o.onsager = cfg.onsager;
            o.tol_factor = cfg.tol_factor;
            two_phase(&map, &o)?
        }
    })
}

fn clean(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

/// Runs every `(α, seed)` task, in parallel on `cfg.jobs` workers, and
/// aggregates per α. A failing or panicking run is recorded with its error
/// and never aborts the sweep. Output order and values depend only on the
/// config, not on the worker count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, ConfigError> {
    cfg.validate()?;
    let seeds = cfg.seeds;
    let tasks = cfg.alpha_grid.len() * seeds;
    let runs: Vec<RunRecord> = with_jobs(cfg.jobs, || {
        map_indexed(tasks, |t| {
            let (ai, si) = (t / seeds, t % seeds);
            let alpha = cfg.alpha_grid[ai];
            let seed = run_seed(cfg.master_seed, ai, si);
            let out = catch_unwind(AssertUnwindSafe(|| run_single(cfg, alpha, seed)));
            let (final_u, error, trace) = match out {
                Ok(Ok(s)) => (s.final_u(), None, cfg.traces.then_some(s.trace)),
                Ok(Err(e)) => (f64::NAN, Some(clean(&e.to_string())), None),
                Err(_) => (f64::NAN, Some("run panicked".to_string()), None),
            };
            RunRecord { alpha_index: ai, seed_index: si, alpha, n: cfg.n_for(alpha), seed, final_u, error, trace }
        })
    });
    let thresholds = if cfg.theory && !cfg.alpha_grid.is_empty() {
        ThresholdSet::compute(&cfg.xi)
    } else {
        ThresholdSet::unavailable()
    };
    let rows = cfg
        .alpha_grid
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let group = &runs[ai * seeds..(ai + 1) * seeds];
            let ok: Vec<f64> = group.iter().filter(|r| r.error.is_none()).map(|r| r.final_u).collect();
            let mut errors: Vec<&str> = group.iter().filter_map(|r| r.error.as_deref()).collect();
            errors.dedup();
            let (mean, sd) = mean_sd(&ok);
            PhaseDiagramRow {
                alpha,
                n: cfg.n_for(alpha),
                runs: seeds,
                failures: seeds - ok.len(),
                mean_final_u: mean,
                sd_final_u: sd,
                theory_u: if cfg.theory { theory_u(cfg, alpha) } else { f64::NAN },
                thresholds,
                error: errors.join(" | "),
            }
        })
        .collect();
    Ok(SweepResult { schema: PHASE_SCHEMA, config: cfg.clone(), rows, runs })
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }

    fn header(&self, schema: &str) -> String {
        let c = &self.config;
        let xi: Vec<String> = c.xi.coeffs().iter().map(|v| v.to_string()).collect();
        format!(
            "# {schema} algorithm={} xi={} d={} seeds={} master_seed={}\n",
            c.algorithm.name(),
            xi.join(","),
            c.d,
            c.seeds,
            c.master_seed
        )
    }

    /// Canonical phase-diagram CSV, one row per α.
    pub fn to_csv(&self) -> String {
        let mut s = self.header(PHASE_SCHEMA);
        s.push_str("alpha,n,runs,failures,mean_final_u,sd_final_u,theory_u,alpha_lb,alpha_ub1,alpha_hd,alpha_tp,error\n");
        for r in &self.rows {
            let t = &r.thresholds;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.alpha,
                r.n,
                r.runs,
                r.failures,
                r.mean_final_u,
                r.sd_final_u,
                r.theory_u,
                t.alpha_lb,
                t.alpha_ub1,
                t.alpha_hd,
                t.alpha_tp,
                r.error
            );
        }
        s
    }

    /// One row per run, in task order.
    pub fn runs_csv(&self) -> String {
        let mut s = self.header(RUNS_SCHEMA);
        s.push_str("alpha_index,seed_index,alpha,n,seed,final_u,error\n");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.alpha_index,
                r.seed_index,
                r.alpha,
                r.n,
                r.seed,
                r.final_u,
                r.error.as_deref().unwrap_or("")
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureXi;

    fn small(algorithm: Algorithm) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(MixtureXi::parse("1,0,0,1").unwrap(), 12);
        c.algorithm = algorithm;
        c.alpha_grid = vec![0.25, 0.5];
        c.seeds = 2;
        c.delta = 0.1;
        c.max_iters = 20;
        c.theory = false;
        c
    }

    #[test]
    fn empty_grid_gives_empty_output() {
        let mut c = small(Algorithm::Hd);
        c.alpha_grid.clear();
        let r = run_sweep(&c).unwrap();
        assert!(r.rows.is_empty() && r.runs.is_empty());
        assert_eq!(r.to_csv().lines().count(), 2);
    }

    #[test]
    fn repeat_runs_are_byte_identical() {
        for a in [Algorithm::Gd, Algorithm::Hd, Algorithm::TwoPhase] {
            let c = small(a);
            let x = run_sweep(&c).unwrap();
            let y = run_sweep(&c).unwrap();
            assert_eq!(x.to_csv(), y.to_csv());
            assert_eq!(x.runs_csv(), y.runs_csv());
            assert_eq!(x.failures(), 0, "{}", x.runs_csv());
        }
    }

    #[test]
    fn failures_are_isolated() {
        let mut c = small(Algorithm::Hd);
        c.d = 300;
        c.alpha_grid = vec![0.01, 0.5];
        // n·d³ at d = 300 blows the default memory budget for the second point only
        let r = run_sweep(&c).unwrap();
        assert_eq!(r.rows[0].failures, 0);
        assert_eq!(r.rows[1].failures, 2);
        assert!(r.rows[1].error.contains("budget"));
        assert!(r.rows[1].mean_final_u.is_nan());
        assert_eq!(r.failures(), 2);
    }

    #[test]
    fn theory_columns_follow_the_algorithm() {
        let mut c = small(Algorithm::Hd);
        c.xi = MixtureXi::parse("1,0,0,0,1").unwrap();
        c.alpha_grid = vec![0.5];
        assert!(theory_u(&c, 0.5) >= 0.0);
        c.algorithm = Algorithm::Gd;
        assert!(theory_u(&c, 0.5).is_nan());
    }

    #[test]
    fn auto_gain_is_zero_without_linear_part() {
        let c = small(Algorithm::TwoPhase);
        assert_eq!(gamma_for(&c, 0.3).unwrap(), 0.0);
        let mut lin = c.clone();
        lin.xi = MixtureXi::parse("1,1").unwrap();
        assert!(gamma_for(&lin, 0.2).unwrap() < 0.0);
    }
}
