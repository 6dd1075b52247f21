use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nem_core::harness::{emit_plot_script, run_single, run_sweep, ExperimentConfig, PlotStyle, RunError};
use nem_core::model::snapshot::MapHeader;
use nem_core::model::MixtureXi;
use nem_core::nn::{self, NnConfig, DEFAULT_DEGREE_CAP, KNEE_LEVEL};
use nem_core::par::with_jobs;
use nem_core::rmt::{sample_edge, EnsembleSpec, RmtError};
use nem_core::theory::{ReportOptions, TheoryReport, TpOptions};
use serde_json::json;

use crate::{Common, ConfigArgs};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    Partial(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Partial(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
            CliError::Partial(m) => write!(f, "partial failure: {m}"),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(io_err(dir))?;
            }
            fs::write(p, text).map_err(io_err(p))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn write_in(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(io_err(&p))?;
    Ok(p)
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::Config(format!("alpha grid entry `{t}`: {e}"))))
        .collect()
}

pub fn theory(c: &Common, xi: &str, alpha: f64, report: &str, literal_remark: bool) -> Result<(), CliError> {
    let xi = MixtureXi::parse(xi).map_err(config_err)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(CliError::Config(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let opts = ReportOptions { literal_remark, ..Default::default() };
    let r = TheoryReport::compute(&xi, alpha, &opts).map_err(config_err)?;
    let text = match report {
        "json" => serde_json::to_string_pretty(&r).expect("report serializes") + "\n",
        "csv" => theory_csv(&r),
        other => return Err(CliError::Config(format!("--report must be json or csv, got `{other}`"))),
    };
    emit(c.out.as_deref(), &text)
}

/// Scalars as `field,value`, then the sampled curve as `t,u` after a
/// separating comment. Notes become comment lines.
fn theory_csv(r: &TheoryReport) -> String {
    let xi: Vec<String> = r.xi.coeffs().iter().map(|v| v.to_string()).collect();
    let mut s = format!("# theory-report.v1 xi={}\n", xi.join(";"));
    for n in &r.notes {
        let _ = writeln!(s, "# note: {}", n.replace('\n', " "));
    }
    s.push_str("field,value\n");
    for (k, v) in r.scalars() {
        let _ = writeln!(s, "{k},{v}");
    }
    s.push_str("# ode-curve\nt,u\n");
    for (t, u) in r.ode_curve.t.iter().zip(&r.ode_curve.u) {
        let _ = writeln!(s, "{t},{u}");
    }
    s
}

/// Config file (if any), then the explicit flags, then `--set` pairs, then
/// the common overrides; validated at the end.
fn build_config(c: &Common, a: &ConfigArgs, extra: &[(&str, String)]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text).map_err(config_err)?
        }
        None => {
            let xi = a.xi.as_deref().ok_or_else(|| CliError::Config("need --config or --xi".into()))?;
            let d = a.d.ok_or_else(|| CliError::Config("need --config or --d".into()))?;
            ExperimentConfig::new(MixtureXi::parse(xi).map_err(config_err)?, d)
        }
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    if a.config.is_some() {
        if let Some(x) = &a.xi {
            pairs.push(("xi".into(), x.clone()));
        }
        if let Some(d) = a.d {
            pairs.push(("d".into(), d.to_string()));
        }
    }
    for (k, v) in [("algorithm", a.algorithm.clone()), ("gamma", a.gamma.clone())] {
        if let Some(v) = v {
            pairs.push((k.into(), v));
        }
    }
    for (k, v) in [("delta", a.delta), ("eta", a.eta)] {
        if let Some(v) = v {
            pairs.push((k.into(), v.to_string()));
        }
    }
    pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        pairs.push((k.trim().into(), v.trim().into()));
    }
    if let Some(s) = c.seed {
        pairs.push(("master_seed".into(), s.to_string()));
    }
    if let Some(j) = c.jobs {
        pairs.push(("jobs".into(), j.to_string()));
    }
    if let Some(o) = &c.out {
        pairs.push(("out".into(), o.display().to_string()));
    }
    for (k, v) in pairs {
        cfg.set(&k, &v).map_err(|m| CliError::Config(format!("{k}: {m}")))?;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

pub fn simulate(c: &Common, a: &ConfigArgs, alpha: Option<f64>) -> Result<(), CliError> {
    let extra: Vec<(&str, String)> = alpha.map(|v| ("alpha_grid", v.to_string())).into_iter().collect();
    let cfg = build_config(c, a, &extra)?;
    let alpha = *cfg.alpha_grid.first().ok_or_else(|| CliError::Config("need --alpha or a non-empty alpha_grid".into()))?;
    let seed = cfg.master_seed;
    let solution = with_jobs(cfg.jobs, || run_single(&cfg, alpha, seed)).map_err(|e| match e {
        RunError::Model(m) => CliError::Config(m.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    let dir = out_dir(&cfg)?;
    let header = MapHeader { n: cfg.n_for(alpha), d: cfg.d, xi: cfg.xi.clone(), seed };
    write_in(&dir, "config.txt", cfg.to_text().as_bytes())?;
    write_in(&dir, "trace.csv", solution.trace.to_csv().as_bytes())?;
    write_in(&dir, "trace.json", solution.trace.to_json().as_bytes())?;
    write_in(&dir, "map.nemmap", &header.to_bytes())?;
    println!("{} alpha={alpha} n={} d={} seed={seed} final_u={}", cfg.algorithm.name(), header.n, cfg.d, solution.final_u());
    Ok(())
}

pub fn phase_diagram(
    c: &Common,
    a: &ConfigArgs,
    alpha_grid: Option<&str>,
    seeds: Option<usize>,
    style: &str,
) -> Result<(), CliError> {
    let style: PlotStyle = style.parse().map_err(CliError::Config)?;
    let mut extra = Vec::new();
    if let Some(g) = alpha_grid {
        // parse here so a bad entry reports the flag, not the key
        parse_grid(g)?;
        extra.push(("alpha_grid", g.to_string()));
    }
    if let Some(s) = seeds {
        extra.push(("seeds", s.to_string()));
    }
    let cfg = build_config(c, a, &extra)?;
    let result = run_sweep(&cfg).map_err(config_err)?;
    let dir = out_dir(&cfg)?;
    write_in(&dir, "config.txt", cfg.to_text().as_bytes())?;
    write_in(&dir, "phase_diagram.csv", result.to_csv().as_bytes())?;
    write_in(&dir, "phase_diagram.json", result.to_json().as_bytes())?;
    write_in(&dir, "runs.csv", result.runs_csv().as_bytes())?;
    write_in(&dir, "phase_diagram.gp", emit_plot_script(&result, style, "phase_diagram.csv", "phase_diagram.png").as_bytes())?;
    let failed = result.failures();
    println!("{} rows, {} runs, {failed} failed -> {}", result.rows.len(), result.runs.len(), dir.display());
    if failed > 0 {
        return Err(CliError::Partial(format!("{failed} of {} runs failed (see runs.csv)", result.runs.len())));
    }
    Ok(())
}

/// Edge tolerance: 5% of `z_*`, or 0.02 absolute when `z_* < 0.4`.
pub fn edge_tolerance(z: f64) -> f64 {
    if z < 0.4 {
        0.02
    } else {
        0.05 * z
    }
}

pub fn rmt_check(c: &Common, a: f64, b: f64, alpha: f64, n: usize, trials: usize) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let spec = EnsembleSpec::with_alpha(n, alpha, a, b, c.seed.unwrap_or(0));
    let stats = with_jobs(c.jobs.unwrap_or(0), || sample_edge(&spec, trials)).map_err(|e| match e {
        RmtError::Budget { .. } | RmtError::Invalid(_) | RmtError::Theory(_) => config_err(e),
        other => CliError::Runtime(other.to_string()),
    })?;
    let z = -stats.predicted;
    let tol = edge_tolerance(z);
    let report = json!({
        "schema": "rmt-check.v1",
        "a": a,
        "b": b,
        "alpha": spec.alpha(),
        "N": n,
        "trials": trials,
        "measured": stats.mean,
        "predicted": stats.predicted,
        "sd": stats.sd,
        "tolerance": tol,
        "pass": (stats.mean - stats.predicted).abs() <= tol,
        "samples": stats.samples,
        "path": stats.path,
    });
    emit(c.out.as_deref(), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))
}

pub struct NnArgs {
    pub m: usize,
    pub input_dim: usize,
    pub a: f64,
    pub alpha_grid: String,
    pub lr: f64,
    pub epochs: usize,
    pub seeds: usize,
    pub batch: usize,
}

pub fn nn(c: &Common, args: NnArgs) -> Result<(), CliError> {
    let alphas = parse_grid(&args.alpha_grid)?;
    if args.seeds == 0 {
        return Err(CliError::Config("seeds must be at least 1".into()));
    }
    let mut base = NnConfig::new(args.m, args.input_dim, 1, args.a, c.seed.unwrap_or(0));
    base.lr = args.lr;
    base.epochs = args.epochs;
    base.batch = args.batch;
    base.validate().map_err(config_err)?;
    let xi = nn::xi_from_network(args.a, DEFAULT_DEGREE_CAP).map_err(config_err)?;
    let tp = TpOptions::default();
    let threshold = nem_core::theory::alpha_tp(&xi, tp).unwrap_or(f64::NAN);
    let rows = with_jobs(c.jobs.unwrap_or(0), || nn::sweep(&base, &alphas, args.seeds, &xi, tp))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let knee = nn::empirical_knee(&rows, KNEE_LEVEL).unwrap_or(f64::NAN);
    let mut s = format!(
        "# nn.v1 m={} D={} a={} lr={} epochs={} batch={} seeds={} seed={} alpha_tp={threshold} knee={knee}\n",
        args.m, args.input_dim, args.a, args.lr, args.epochs, args.batch, args.seeds, base.seed
    );
    s.push_str("alpha,mean_err,sd_err,theory_u\n");
    for r in &rows {
        let _ = writeln!(s, "{},{},{},{}", r.alpha, r.mean_err, r.sd_err, r.theory_u);
    }
    emit(c.out.as_deref(), &s)
}
