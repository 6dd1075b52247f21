use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::OnsagerCurvature;
use crate::model::{MixtureXi, Storage};
use crate::theory::DEFAULT_AMP_MARGIN;

pub const CONFIG_HEADER: &str = "# nem-config v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("first line must be `{CONFIG_HEADER}`")]
    Header,
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "hd")]
    Hd,
    #[serde(rename = "two-phase")]
    TwoPhase,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Hd => "hd",
            Algorithm::TwoPhase => "two-phase",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gd" => Ok(Algorithm::Gd),
            "hd" => Ok(Algorithm::Hd),
            "two-phase" | "tp" => Ok(Algorithm::TwoPhase),
            _ => Err(format!("unknown algorithm {s:?} (expected gd, hd or two-phase)")),
        }
    }
}

/// How the AMP gain is chosen: `γ_*` at the target overlap for each α, or a
/// fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaPolicy {
    Auto,
    Explicit(f64),
}

impl FromStr for GammaPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(GammaPolicy::Auto);
        }
        s.parse::<f64>().map(GammaPolicy::Explicit).map_err(|_| format!("gamma must be `auto` or a number, got {s:?}"))
    }
}

impl std::fmt::Display for GammaPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GammaPolicy::Auto => write!(f, "auto"),
            GammaPolicy::Explicit(g) => write!(f, "{g}"),
        }
    }
}

/// Declarative description of a sweep over α and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub xi: MixtureXi,
    pub algorithm: Algorithm,
    pub alpha_grid: Vec<f64>,
    pub d: usize,
    /// Seeds per grid point.
    pub seeds: usize,
    pub master_seed: u64,
    pub eta: f64,
    pub max_iters: usize,
    pub stop_energy: f64,
    pub delta: f64,
    pub gamma: GammaPolicy,
    /// AMP iterations.
    pub l: usize,
    pub onsager: OnsagerCurvature,
    pub amp_margin: f64,
    /// Eigenvector slack in units of `d·δ`.
    pub tol_factor: f64,
    pub storage: Storage,
    /// Attach theory columns (thresholds and predicted energies).
    pub theory: bool,
    /// Keep per-run traces in the output.
    pub traces: bool,
    pub out: String,
    /// Worker threads, 0 for all cores.
    pub jobs: usize,
}

impl ExperimentConfig {
    /// Defaults for everything except the mixture and dimension.
    pub fn new(xi: MixtureXi, d: usize) -> Self {
        ExperimentConfig {
            xi,
            algorithm: Algorithm::Hd,
            alpha_grid: Vec::new(),
            d,
            seeds: 1,
            master_seed: 0,
            eta: 0.01,
            max_iters: 1000,
            stop_energy: 0.0,
            delta: 0.02,
            gamma: GammaPolicy::Auto,
            l: 60,
            onsager: OnsagerCurvature::default(),
            amp_margin: DEFAULT_AMP_MARGIN,
            tol_factor: 1.0,
            storage: Storage::Dense,
            theory: true,
            traces: false,
            out: "nem-out".into(),
            jobs: 0,
        }
    }

    /// `n = round(α·d)`.
    pub fn n_for(&self, alpha: f64) -> usize {
        (alpha * self.d as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |s: String| Err(ConfigError::Invalid(s));
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        for &a in &self.alpha_grid {
            if !(a.is_finite() && a > 0.0) || self.n_for(a) < 1 {
                return bad(format!("α = {a} gives n = round(α·d) < 1 at d = {}", self.d));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.l < 2 {
            return bad(format!("l must be at least 2, got {}", self.l));
        }
        if let GammaPolicy::Explicit(g) = self.gamma {
            if !g.is_finite() {
                return bad("gamma must be finite".into());
            }
        }
        if !(self.tol_factor > 0.0) || !(self.amp_margin >= 0.0) || !(self.stop_energy >= 0.0) {
            return bad("tol_factor must be positive, amp_margin and stop_energy non-negative".into());
        }
        Ok(())
    }

    /// Flat `key = value` text with the versioned header; parses back to an
    /// identical config.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = format!("{CONFIG_HEADER}\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("xi", join(self.xi.coeffs()));
        kv("algorithm", self.algorithm.name().into());
        kv("alpha_grid", join(&self.alpha_grid));
        kv("d", self.d.to_string());
        kv("seeds", self.seeds.to_string());
        kv("master_seed", self.master_seed.to_string());
        kv("eta", self.eta.to_string());
        kv("max_iters", self.max_iters.to_string());
        kv("stop_energy", self.stop_energy.to_string());
        kv("delta", self.delta.to_string());
        kv("gamma", self.gamma.to_string());
        kv("l", self.l.to_string());
        kv("onsager", self.onsager.name().into());
        kv("amp_margin", self.amp_margin.to_string());
        kv("tol_factor", self.tol_factor.to_string());
        kv("storage", storage_name(self.storage).into());
        kv("theory", self.theory.to_string());
        kv("traces", self.traces.to_string());
        kv("out", self.out.clone());
        kv("jobs", self.jobs.to_string());
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Accepts the key-value form or JSON (anything starting with `{`).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?
        } else {
            Self::parse_text(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns one key from its text form, as in the key-value format.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        match key {
            "xi" => self.xi = MixtureXi::parse(v).map_err(|e| e.to_string())?,
            "d" => self.d = num(v)?,
            "algorithm" => self.algorithm = v.parse()?,
            "alpha_grid" => {
                self.alpha_grid = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(num).collect::<Result<_, _>>()?
            }
            "seeds" => self.seeds = num(v)?,
            "master_seed" => self.master_seed = num(v)?,
            "eta" => self.eta = num(v)?,
            "max_iters" => self.max_iters = num(v)?,
            "stop_energy" => self.stop_energy = num(v)?,
            "delta" => self.delta = num(v)?,
            "gamma" => self.gamma = v.parse()?,
            "l" => self.l = num(v)?,
            "onsager" => self.onsager = OnsagerCurvature::parse(v).ok_or("expected curvature or literal")?,
            "amp_margin" => self.amp_margin = num(v)?,
            "tol_factor" => self.tol_factor = num(v)?,
            "storage" => self.storage = parse_storage(v)?,
            "theory" => self.theory = num(v)?,
            "traces" => self.traces = num(v)?,
            "out" => self.out = v.to_string(),
            "jobs" => self.jobs = num(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn parse_text(text: &str) -> Result<Self, ConfigError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CONFIG_HEADER => {}
            _ => return Err(ConfigError::Header),
        }
        let mut xi = None;
        let mut d = None;
        let mut entries = Vec::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| ConfigError::Line { line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "xi" => xi = Some(MixtureXi::parse(v).map_err(|e| err(e.to_string()))?),
                "d" => d = Some(v.parse::<usize>().map_err(|e| err(format!("d: {e}")))?),
                _ => entries.push((i + 1, k.to_string(), v.to_string())),
            }
        }
        let mut cfg = ExperimentConfig::new(xi.ok_or(ConfigError::Missing("xi"))?, d.ok_or(ConfigError::Missing("d"))?);
        for (line, k, v) in entries {
            cfg.set(&k, &v).map_err(|msg| ConfigError::Line { line, msg: format!("{k}: {msg}") })?;
        }
        Ok(cfg)
    }
}

fn storage_name(s: Storage) -> &'static str {
    match s {
        Storage::Dense => "dense",
        Storage::OnDemand => "on-demand",
    }
}

fn parse_storage(s: &str) -> Result<Storage, String> {
    match s {
        "dense" => Ok(Storage::Dense),
        "on-demand" => Ok(Storage::OnDemand),
        _ => Err(format!("expected dense or on-demand, got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(MixtureXi::parse("1,0.5,0,1").unwrap(), 40);
        c.alpha_grid = vec![0.1, 0.25, 1.0 / 3.0];
        c.gamma = GammaPolicy::Explicit(-0.4);
        c.algorithm = Algorithm::TwoPhase;
        c
    }

    #[test]
    fn text_round_trip() {
        let c = sample();
        let t = c.to_text();
        assert!(t.starts_with("# nem-config v1\nxi = 1,0.5,0,1\n"));
        assert_eq!(ExperimentConfig::parse(&t).unwrap(), c);
    }

    #[test]
    fn json_round_trip() {
        let c = sample();
        assert_eq!(ExperimentConfig::parse(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn minimal_text_uses_defaults() {
        let c = ExperimentConfig::parse("# nem-config v1\n# comment\nxi = 1,0,0,1\nd = 30\n\nalpha_grid =\n").unwrap();
        assert_eq!(c, ExperimentConfig::new(MixtureXi::parse("1,0,0,1").unwrap(), 30));
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(ExperimentConfig::parse("xi = 1\n"), Err(ConfigError::Header));
        assert_eq!(ExperimentConfig::parse("# nem-config v1\nd = 4\n"), Err(ConfigError::Missing("xi")));
        match ExperimentConfig::parse("# nem-config v1\nxi = 1\nd = 4\nbogus = 1\n") {
            Err(ConfigError::Line { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("# nem-config v1\nxi = 1\nd = 10\nalpha_grid = 0.01\n") {
            Err(ConfigError::Invalid(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(
            coeffs in prop::collection::vec(0.0f64..5.0, 1..5),
            grid in prop::collection::vec(0.05f64..0.95, 0..6),
            seed in any::<u64>(),
            delta in 0.001f64..0.5,
            gamma in -3.0f64..0.0,
        ) {
            prop_assume!(coeffs.iter().sum::<f64>() > 0.0);
            let mut c = ExperimentConfig::new(MixtureXi::new(coeffs).unwrap(), 100);
            c.alpha_grid = grid;
            c.master_seed = seed;
            c.delta = delta;
            c.gamma = GammaPolicy::Explicit(gamma);
            prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c.clone());
            prop_assert_eq!(ExperimentConfig::parse(&c.to_json()).unwrap(), c);
        }
    }
}
