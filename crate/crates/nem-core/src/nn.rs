//! Two-layer ELU network fitting random labels, and the covariance-matched
//! mixture that lets the theory module predict its training error.
//!
//! With `x = W/√m`, `n·R̂_n(W)` is the energy `H(x)` of a system of `n`
//! equations in `d = mD` unknowns, so `α = n/(mD)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::RunTrace;
use crate::linalg::mean_sd;
use crate::model::{MixtureXi, ModelError};
use crate::par::map_indexed;
use crate::rng::{derive_seed, stream_rng};
use crate::theory::{alpha_tp, tp_final_u, TheoryError, TpOptions};

pub const DEFAULT_NODES: usize = 64;
/// Highest Hermite degree kept in the matched mixture.
pub const DEFAULT_DEGREE_CAP: usize = 12;
const NN_STREAM: u64 = 0x6e6e;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("correlation must lie in [-1, 1], got {0}")]
    Correlation(f64),
    #[error("Hermite coefficient {k} is negative ({value:.3e}): activation does not match a mixture")]
    NegativeCoefficient { k: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

pub fn elu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn elu_prime(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Gauss–Hermite rule for the standard normal weight (probabilists'
/// polynomials), by Golub–Welsch: nodes are the eigenvalues of the Jacobi
/// matrix with off-diagonal `√k`, weights the squared first components of
/// its eigenvectors.
pub fn gauss_hermite(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.max(1);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Gaussian kernel of an activation: `K(q) = E[σ(G₁)σ(G₂)]` for unit
/// normals with correlation `q`, and its Hermite data.
#[derive(Clone, Debug)]
pub struct ActivationKernel {
    x: Vec<f64>,
    w: Vec<f64>,
    /// `σ` at the nodes.
    sx: Vec<f64>,
    /// `E[Gσ(G)]`.
    pub sigma1: f64,
    act: fn(f64) -> f64,
}

impl ActivationKernel {
    pub fn new(act: fn(f64) -> f64, nodes: usize) -> Self {
        let (x, w) = gauss_hermite(nodes);
        let sx: Vec<f64> = x.iter().map(|&v| act(v)).collect();
        let sigma1 = x.iter().zip(&w).zip(&sx).map(|((x, w), s)| w * x * s).sum();
        ActivationKernel { x, w, sx, sigma1, act }
    }

    pub fn elu() -> Self {
        Self::new(elu, DEFAULT_NODES)
    }

    /// `K(q)` by tensorized quadrature on `G₂ = qG₁ + √(1−q²)G₃`.
    pub fn k(&self, q: f64) -> Result<f64, NnError> {
        if !(-1.0..=1.0).contains(&q) {
            return Err(NnError::Correlation(q));
        }
        let r = (1.0 - q * q).max(0.0).sqrt();
        let mut acc = 0.0;
        for (i, (&x1, &w1)) in self.x.iter().zip(&self.w).enumerate() {
            let inner: f64 = self.x.iter().zip(&self.w).map(|(&x3, &w3)| w3 * (self.act)(q * x1 + r * x3)).sum();
            acc += w1 * self.sx[i] * inner;
        }
        Ok(acc)
    }

    /// `K(q) − σ₁²q`: the kernel with the linear component removed.
    pub fn k0(&self, q: f64) -> Result<f64, NnError> {
        Ok(self.k(q)? - self.sigma1 * self.sigma1 * q)
    }

    /// Normalized Hermite coefficients `c_k = E[σ(G)He_k(G)]/√k!`, so that
    /// `K(q) = Σ c_k² q^k`.
    pub fn hermite_coeffs(&self, degree: usize) -> Vec<f64> {
        let mut c = vec![0.0; degree + 1];
        for ((&x, &w), &s) in self.x.iter().zip(&self.w).zip(&self.sx) {
            // normalized recurrence: h_{k+1} = (x h_k − √k h_{k−1})/√(k+1)
            let (mut hm, mut h) = (0.0, 1.0);
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += w * s * h;
                let next = (x * h - (k as f64).sqrt() * hm) / ((k + 1) as f64).sqrt();
                hm = h;
                h = next;
            }
        }
        c
    }
}

/// Covariance-matched mixture `ξ(q) = 1 + a²K₀(q)` truncated at
/// `degree_cap`: coefficient `k ≠ 1` is `a²c_k²`, the linear one is removed.
pub fn xi_from_kernel(kernel: &ActivationKernel, a: f64, degree_cap: usize) -> Result<MixtureXi, NnError> {
    if degree_cap < 3 {
        return Err(NnError::Config(format!("degree cap must be at least 3, got {degree_cap}")));
    }
    let c = kernel.hermite_coeffs(degree_cap);
    let mut coeffs: Vec<f64> = c.iter().map(|v| a * a * v * v).collect();
    coeffs[0] += 1.0;
    coeffs[1] = 0.0;
    for (k, v) in coeffs.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-6 {
                return Err(NnError::NegativeCoefficient { k, value: *v });
            }
            *v = 0.0;
        } else if *v < 1e-12 {
            *v = 0.0;
        }
    }
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    Ok(MixtureXi::new(coeffs)?)
}

/// [`xi_from_kernel`] for the ELU network.
pub fn xi_from_network(a: f64, degree_cap: usize) -> Result<MixtureXi, NnError> {
    xi_from_kernel(&ActivationKernel::elu(), a, degree_cap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnConfig {
    /// Hidden units (even).
    pub m: usize,
    /// Input dimension.
    pub input_dim: usize,
    /// Samples.
    pub n: usize,
    pub a: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub eps_init: f64,
    pub seed: u64,
}

impl NnConfig {
    pub fn new(m: usize, input_dim: usize, n: usize, a: f64, seed: u64) -> Self {
        NnConfig { m, input_dim, n, a, lr: 0.1, epochs: 2000, batch: 4, eps_init: 0.03, seed }
    }

    /// `n/(mD)`.
    pub fn alpha(&self) -> f64 {
        self.n as f64 / (self.m * self.input_dim) as f64
    }

    /// `n = round(α·mD)`, at least 1.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.n = ((alpha * (self.m * self.input_dim) as f64).round() as usize).max(1);
        self
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |s: String| Err(NnError::Config(s));
        if self.m == 0 || self.m % 2 != 0 {
            return bad(format!("m must be even and positive, got {}", self.m));
        }
        if self.input_dim == 0 || self.n == 0 || self.batch == 0 {
            return bad("input dimension, sample count and batch size must be positive".into());
        }
        if !(self.lr > 0.0 && self.a > 0.0 && self.eps_init >= 0.0) {
            return bad(format!("need lr > 0, a > 0, eps ≥ 0, got lr = {}, a = {}, eps = {}", self.lr, self.a, self.eps_init));
        }
        Ok(())
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

struct Net<'a> {
    cfg: &'a NnConfig,
    /// Row `j` is `w_j`.
    w: Vec<f64>,
    signs: Vec<f64>,
}

impl Net<'_> {
    fn output(&self, z: &[f64], pre: &mut [f64]) -> f64 {
        let dim = self.cfg.input_dim;
        let mut f = 0.0;
        for (j, p) in pre.iter_mut().enumerate() {
            let wj = &self.w[j * dim..(j + 1) * dim];
            *p = wj.iter().zip(z).map(|(a, b)| a * b).sum();
            f += self.signs[j] * elu(*p);
        }
        self.cfg.a / (self.cfg.m as f64).sqrt() * f
    }

    fn risk(&self, z: &[f64], y: &[f64]) -> f64 {
        let dim = self.cfg.input_dim;
        let mut pre = vec![0.0; self.cfg.m];
        let s: f64 = y.iter().enumerate().map(|(i, yi)| (yi - self.output(&z[i * dim..(i + 1) * dim], &mut pre)).powi(2)).sum();
        s / (2.0 * y.len() as f64)
    }

    fn frob_sq(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }
}

/// Rescales `w` onto the Frobenius ball `‖w‖² ≤ radius` if outside.
fn project(w: &mut [f64], radius: f64) {
    let f: f64 = w.iter().map(|v| v * v).sum();
    if f > radius {
        let c = (radius / f).sqrt();
        w.iter_mut().for_each(|v| *v *= c);
    }
}

/// Projected minibatch SGD on the empirical risk with random `±1` labels.
///
/// Records `R̂_n` after every epoch (`step` 0 is the initialization);
/// `radius_sq` is `‖W‖²_F/m`, which the projection keeps at most 1.
pub fn train_interpolation(cfg: &NnConfig) -> Result<RunTrace, NnError> {
    cfg.validate()?;
    let (m, dim, n) = (cfg.m, cfg.input_dim, cfg.n);
    let mut rng = stream_rng(cfg.seed, &[NN_STREAM]);
    let z: Vec<f64> = (0..n * dim).map(|_| normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let mut signs: Vec<f64> = (0..m).map(|j| if j < m / 2 { 1.0 } else { -1.0 }).collect();
    signs.shuffle(&mut rng);
    let sd = cfg.eps_init / (dim as f64).sqrt();
    let w: Vec<f64> = (0..m * dim).map(|_| sd * normal(&mut rng)).collect();
    let mut net = Net { cfg, w, signs };
    let radius = m as f64;
    // a large eps_init can start outside the constraint set
    project(&mut net.w, radius);

    let mut trace = RunTrace::new("sgd");
    trace.push(0, 0.0, net.frob_sq() / radius, net.risk(&z, &y), &[]);
    let scale = cfg.a / (m as f64).sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    let mut pre = vec![0.0; m];
    let mut step = vec![0.0; m * dim];
    for epoch in 0..cfg.epochs {
        let eta = cfg.lr / (1.0 + epoch as f64).sqrt();
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch) {
            step.iter_mut().for_each(|v| *v = 0.0);
            for &i in batch {
                let zi = &z[i * dim..(i + 1) * dim];
                let r = y[i] - net.output(zi, &mut pre);
                // −½∇(y − f)² = (y − f)∇f
                for j in 0..m {
                    let c = r * scale * net.signs[j] * elu_prime(pre[j]);
                    for (s, zk) in step[j * dim..(j + 1) * dim].iter_mut().zip(zi) {
                        *s += c * zk;
                    }
                }
            }
            for (wv, s) in net.w.iter_mut().zip(&step) {
                *wv += eta * s;
            }
            project(&mut net.w, radius);
        }
        trace.push(epoch + 1, (epoch + 1) as f64, net.frob_sq() / radius, net.risk(&z, &y), &[("eta", eta)]);
    }
    Ok(trace)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NnRow {
    pub alpha: f64,
    pub n: usize,
    pub mean_err: f64,
    pub sd_err: f64,
    /// Covariance-matched two-phase prediction.
    pub theory_u: f64,
}

/// Mean and sd of the final training error over `seeds` runs per grid
/// point, with the matched theory alongside. Seeds are derived from
/// `base.seed` and the grid and seed indices.
pub fn sweep(base: &NnConfig, alphas: &[f64], seeds: usize, xi: &MixtureXi, tp: TpOptions) -> Result<Vec<NnRow>, NnError> {
    base.validate()?;
    let tasks = alphas.len() * seeds;
    let finals = map_indexed(tasks, |t| {
        let (ai, si) = (t / seeds, t % seeds);
        let mut cfg = base.clone().with_alpha(alphas[ai]);
        cfg.seed = derive_seed(base.seed, &[ai as u64, si as u64]);
        train_interpolation(&cfg).map(|tr| tr.last().map_or(f64::NAN, |r| r.u))
    });
    let finals = finals.into_iter().collect::<Result<Vec<_>, _>>()?;
    alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let (mean, sd) = mean_sd(&finals[ai * seeds..(ai + 1) * seeds]);
            let cfg = base.clone().with_alpha(alpha);
            Ok(NnRow { alpha: cfg.alpha(), n: cfg.n, mean_err: mean, sd_err: sd, theory_u: tp_final_u(cfg.alpha(), xi, tp)?.0 })
        })
        .collect()
}

/// Default error level that marks the knee.
pub const KNEE_LEVEL: f64 = 0.01;

/// Where the mean error first crosses `level`, linearly interpolated between
/// grid points; `None` if it never does.
pub fn empirical_knee(rows: &[NnRow], level: f64) -> Option<f64> {
    let i = rows.iter().position(|r| r.mean_err >= level)?;
    if i == 0 {
        return Some(rows[0].alpha);
    }
    let (a, b) = (&rows[i - 1], &rows[i]);
    Some(a.alpha + (b.alpha - a.alpha) * (level - a.mean_err) / (b.mean_err - a.mean_err))
}

/// Two-phase threshold of the covariance-matched ELU mixture.
pub fn matched_threshold(a: f64, degree_cap: usize, tp: TpOptions) -> Result<f64, NnError> {
    Ok(alpha_tp(&xi_from_network(a, degree_cap)?, tp)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};

    fn std_normal() -> Normal {
        Normal::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn elu_values() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(elu(1.0), 1.0);
        assert!((elu(-1.0) - (-0.632_120_558_828_557_7)).abs() < 1e-15);
        assert_eq!(elu_prime(0.0), 1.0);
        assert!((elu_prime(-1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn hermite_rule_integrates_polynomials() {
        let (x, w) = gauss_hermite(20);
        let moment = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((moment(0) - 1.0).abs() < 1e-13);
        assert!((moment(2) - 1.0).abs() < 1e-12);
        assert!((moment(4) - 3.0).abs() < 1e-11);
        assert!((moment(6) - 15.0).abs() < 1e-10);
        assert!(moment(5).abs() < 1e-10);
    }

    #[test]
    fn elu_kernel_closed_forms() {
        let nd = std_normal();
        let (phi, cdf) = (|x: f64| nd.pdf(x), |x: f64| nd.cdf(x));
        let k = ActivationKernel::elu();
        let s1 = 0.5 + 0.5f64.exp() * (cdf(-1.0) - phi(1.0)) + phi(0.0);
        assert!((k.sigma1 - s1).abs() < 1e-4, "{} vs {s1}", k.sigma1);
        let k1 = 0.5 + 2f64.exp() * cdf(-2.0) - 2.0 * 0.5f64.exp() * cdf(-1.0) + cdf(0.0);
        assert!((k.k(1.0).unwrap() - k1).abs() < 1e-4, "{} vs {k1}", k.k(1.0).unwrap());
        let mean: f64 = k.hermite_coeffs(0)[0];
        assert!((k.k(0.0).unwrap() - mean * mean).abs() < 1e-12);
        assert!(k.k(1.2).is_err());
    }

    #[test]
    fn kernel_is_bounded_by_cauchy_schwarz() {
        let k = ActivationKernel::elu();
        let k1 = k.k(1.0).unwrap();
        let mut prev = k.k(-1.0).unwrap();
        for i in -19..=20 {
            let v = k.k(i as f64 / 20.0).unwrap();
            assert!(v <= k1 + 1e-12 && (v - prev).abs() < 0.1);
            prev = v;
        }
    }

    #[test]
    fn matched_mixture_reconstructs_kernel() {
        let k = ActivationKernel::elu();
        let xi = xi_from_kernel(&k, 1.0, 12).unwrap();
        assert_eq!(xi.coeff(1), 0.0);
        for q in [0.25, 0.5, 0.75] {
            let direct = 1.0 + k.k0(q).unwrap();
            assert!((xi.value(q) - direct).abs() < 1e-4, "q={q}: {} vs {direct}", xi.value(q));
        }
        for i in -9..=9 {
            let q = i as f64 / 10.0;
            assert!((xi.value(q) - 1.0 - k.k0(q).unwrap()).abs() < 1e-3, "q={q}");
        }
    }

    #[test]
    fn degenerate_activations() {
        assert_eq!(xi_from_network(0.0, 6).unwrap().coeffs(), &[1.0]);
        let lin = ActivationKernel::new(|x| x, 32);
        assert_eq!(xi_from_kernel(&lin, 2.0, 6).unwrap().coeffs(), &[1.0]);
        assert!(xi_from_network(1.0, 2).is_err());
    }

    #[test]
    fn projection_keeps_weights_in_ball() {
        let mut cfg = NnConfig::new(6, 5, 40, 3.0, 2);
        cfg.lr = 2.0;
        cfg.epochs = 30;
        let tr = train_interpolation(&cfg).unwrap();
        assert!(tr.records.iter().all(|r| r.radius_sq <= 1.0 + 1e-12));
        assert!(tr.records.iter().any(|r| r.radius_sq > 1.0 - 1e-9));
    }

    #[test]
    fn single_sample_is_interpolated() {
        let mut cfg = NnConfig::new(20, 20, 1, 1.0, 5);
        cfg.epochs = 200;
        let tr = train_interpolation(&cfg).unwrap();
        assert!(tr.last().unwrap().u <= 1e-3, "{}", tr.last().unwrap().u);
    }

    #[test]
    fn knee_interpolates_crossing() {
        let row = |alpha, mean_err| NnRow { alpha, n: 0, mean_err, sd_err: 0.0, theory_u: 0.0 };
        let rows = [row(0.1, 0.0), row(0.2, 0.005), row(0.3, 0.025)];
        assert!((empirical_knee(&rows, 0.01).unwrap() - 0.225).abs() < 1e-12);
        assert_eq!(empirical_knee(&rows, 0.0), Some(0.1));
        assert_eq!(empirical_knee(&rows, 0.5), None);
    }

    #[test]
    fn odd_width_rejected() {
        assert!(train_interpolation(&NnConfig::new(5, 4, 3, 1.0, 0)).is_err());
    }
}
