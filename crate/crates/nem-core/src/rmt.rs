//! Monte Carlo checks of the spectral claims: `A = a√N·W + b·ZᵀZ` with `W`
//! a GOE matrix (diagonal variance 2) and `Z` an `M × N` standard Gaussian
//! matrix, and the projected Hessian of a sampled map at a fixed point.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dense_eigenvalues, dense_min_eigen, gaussian_vec, lanczos_min, mean_sd, LanczosError};
use crate::model::{GaussianMap, MapOptions, MixtureXi, ModelError, Storage};
use crate::par::map_indexed;
use crate::rng::{derive_seed, stream_rng};
use crate::theory::{spectral_density, support_bracket, z_star, TheoryError};

/// Largest `N` handled by the dense symmetric eigensolver.
pub const DENSE_LIMIT: usize = 1200;
/// Largest `N` accepted at all.
pub const MAX_N: usize = 3000;

const ENSEMBLE_STREAM: u64 = 0x726d74;
const LANCZOS_STREAM: u64 = 0x6c7a;
const HESSIAN_STREAM: u64 = 0x686c;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RmtError {
    #[error("N = {n} exceeds the eigensolver budget of {limit}")]
    Budget { n: usize, limit: usize },
    #[error("invalid ensemble: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Matrix size `N`.
    pub n: usize,
    /// Rows of `Z`; `α = M/N`.
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    /// `M = round(αN)`.
    pub fn with_alpha(n: usize, alpha: f64, a: f64, b: f64, seed: u64) -> Self {
        EnsembleSpec { n, m: (alpha * n as f64).round() as usize, a, b, seed }
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    fn validate(&self) -> Result<(), RmtError> {
        if self.n == 0 || self.m > self.n {
            return Err(RmtError::Invalid(format!("need 1 ≤ N and M ≤ N, got N = {}, M = {}", self.n, self.m)));
        }
        if !(self.a >= 0.0 && self.b >= 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(RmtError::Invalid(format!("a, b must be finite and non-negative, got a = {}, b = {}", self.a, self.b)));
        }
        if self.n > MAX_N {
            return Err(RmtError::Budget { n: self.n, limit: MAX_N });
        }
        Ok(())
    }

    /// `−z_*(α, a, b)`, the predicted limit of `λ_min/N`.
    pub fn predicted_edge(&self) -> f64 {
        -z_star(self.alpha(), self.a, self.b)
    }
}

/// One draw of `A` for trial index `trial`.
pub fn sample_matrix(spec: &EnsembleSpec, trial: usize) -> DMatrix<f64> {
    let n = spec.n;
    let mut rng = stream_rng(spec.seed, &[ENSEMBLE_STREAM, trial as u64]);
    let mut a = DMatrix::<f64>::zeros(n, n);
    if spec.a > 0.0 {
        let s = spec.a * (n as f64).sqrt();
        for j in 0..n {
            for i in 0..=j {
                let g: f64 = StandardNormal.sample(&mut rng);
                if i == j {
                    a[(i, i)] = s * std::f64::consts::SQRT_2 * g;
                } else {
                    a[(i, j)] = s * g;
                    a[(j, i)] = s * g;
                }
            }
        }
    }
    if spec.b > 0.0 && spec.m > 0 {
        let z = DMatrix::<f64>::from_fn(spec.m, n, |_, _| StandardNormal.sample(&mut rng));
        a += z.tr_mul(&z) * spec.b;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenPath {
    Dense,
    Lanczos,
}

impl EigenPath {
    pub fn for_size(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            EigenPath::Dense
        } else {
            EigenPath::Lanczos
        }
    }
}

/// Smallest eigenvalue of a dense symmetric matrix along the chosen path.
pub fn lambda_min(a: &DMatrix<f64>, path: EigenPath, seed: u64) -> Result<f64, RmtError> {
    match path {
        EigenPath::Dense => Ok(dense_min_eigen(a).0),
        EigenPath::Lanczos => {
            let n = a.nrows();
            let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max) * (n as f64).sqrt();
            let mut rng = stream_rng(seed, &[LANCZOS_STREAM]);
            let start = gaussian_vec(&mut rng, n);
            let r = lanczos_min(
                |v| (a * DVector::from_column_slice(v)).as_slice().to_vec(),
                |_| {},
                n,
                start,
                1e-7 * scale.max(1e-300),
                400,
                || gaussian_vec(&mut rng, n),
            )?;
            Ok(r.value)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeStats {
    /// `λ_min/N` per trial.
    pub samples: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// `−z_*(α, a, b)`.
    pub predicted: f64,
    pub path: EigenPath,
}

/// `λ_min/N` over independent trials, dense below [`DENSE_LIMIT`] and Lanczos
/// above.
pub fn sample_edge(spec: &EnsembleSpec, trials: usize) -> Result<EdgeStats, RmtError> {
    sample_edge_with(spec, trials, EigenPath::for_size(spec.n))
}

pub fn sample_edge_with(spec: &EnsembleSpec, trials: usize, path: EigenPath) -> Result<EdgeStats, RmtError> {
    spec.validate()?;
    let n = spec.n as f64;
    let samples = map_indexed(trials, |t| {
        let a = sample_matrix(spec, t);
        lambda_min(&a, path, derive_seed(spec.seed, &[LANCZOS_STREAM, t as u64])).map(|l| l / n)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let (mean, sd) = mean_sd(&samples);
    Ok(EdgeStats { samples, mean, sd, predicted: spec.predicted_edge(), path })
}

/// Empirical CDF of the eigenvalues of `A/N` (trial 0) at each grid point.
pub fn spectral_cdf(spec: &EnsembleSpec, grid: &[f64]) -> Result<Vec<f64>, RmtError> {
    spec.validate()?;
    let n = spec.n as f64;
    let eig: Vec<f64> = dense_eigenvalues(&sample_matrix(spec, 0)).into_iter().map(|v| v / n).collect();
    Ok(grid.iter().map(|&x| eig.partition_point(|&e| e <= x) as f64 / n).collect())
}

/// CDF of the limiting law of `A/N` at each grid point, by trapezoid
/// quadrature of the density on `resolution` points; the rank-deficiency
/// atom at 0 is added when `a = 0`.
pub fn limit_cdf(alpha: f64, a: f64, b: f64, grid: &[f64], resolution: usize) -> Result<Vec<f64>, RmtError> {
    let (lo, hi) = support_bracket(alpha, a, b);
    let res = resolution.max(16);
    let h = (hi - lo) / res as f64;
    let mut xs = Vec::with_capacity(res + 1);
    let mut cum = Vec::with_capacity(res + 1);
    let mut acc = 0.0;
    let mut prev = spectral_density(lo, alpha, a, b)?;
    xs.push(lo);
    cum.push(0.0);
    for i in 1..=res {
        let x = lo + h * i as f64;
        let f = spectral_density(x, alpha, a, b)?;
        acc += 0.5 * h * (prev + f);
        prev = f;
        xs.push(x);
        cum.push(acc);
    }
    let atom = if a == 0.0 && alpha < 1.0 { 1.0 - alpha } else { 0.0 };
    Ok(grid
        .iter()
        .map(|&x| {
            let continuous = if x <= lo {
                0.0
            } else if x >= hi {
                acc
            } else {
                let i = (((x - lo) / h) as usize).min(res - 1);
                let w = (x - xs[i]) / h;
                cum[i] + w * (cum[i + 1] - cum[i])
            };
            continuous + if x >= 0.0 { atom } else { 0.0 }
        })
        .collect())
}

/// `max_i |F(x_i) − G(x_i)|` over a shared grid.
pub fn kolmogorov_distance(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HessianTrial {
    /// `λ_min` of the tangent-space Hessian, divided by `d`.
    pub lambda_min: f64,
    /// `−z_*(α, √(2αξ''(q)H/n), ξ'(q))` with the trial's own `H/n`.
    pub predicted: f64,
    pub energy_per_n: f64,
}

impl HessianTrial {
    pub fn rel_err(&self) -> f64 {
        ((self.lambda_min - self.predicted) / self.predicted).abs()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HessianLawReport {
    pub n: usize,
    pub d: usize,
    pub q: f64,
    pub trials: Vec<HessianTrial>,
    /// `ξ(q)/2`.
    pub energy_target: f64,
    /// One standard deviation of `H/n` (`ξ(q)/2 · √(2/n)`).
    pub energy_sd: f64,
}

impl HessianLawReport {
    pub fn mean_lambda(&self) -> f64 {
        mean_sd(&self.trials.iter().map(|t| t.lambda_min).collect::<Vec<_>>()).0
    }

    pub fn mean_predicted(&self) -> f64 {
        mean_sd(&self.trials.iter().map(|t| t.predicted).collect::<Vec<_>>()).0
    }

    /// Relative gap between the trial-averaged edge and its prediction.
    pub fn rel_err(&self) -> f64 {
        ((self.mean_lambda() - self.mean_predicted()) / self.mean_predicted()).abs()
    }

    /// Largest `|H/n − ξ(q)/2|` in units of the χ² standard deviation.
    pub fn energy_sigmas(&self) -> f64 {
        self.trials.iter().map(|t| (t.energy_per_n - self.energy_target).abs() / self.energy_sd).fold(0.0, f64::max)
    }
}

/// Samples `trials` maps and inspects each at the fixed point `√q·e₁`.
///
/// The point does not depend on the map, and the coupling law is rotation
/// invariant, so this is the same as an independent uniformly random point
/// of norm `√q`. Couplings are regenerated on demand and only those touching
/// the first coordinate are read, which keeps `d` in the hundreds feasible
/// at degree 3 or 4.
pub fn verify_hessian_law(xi: &MixtureXi, n: usize, d: usize, q: f64, trials: usize, seed: u64) -> Result<HessianLawReport, RmtError> {
    if !(0.0..1.0).contains(&q) {
        return Err(RmtError::Invalid(format!("q must lie in [0, 1), got {q}")));
    }
    if d < 2 || n == 0 {
        return Err(RmtError::Invalid(format!("need n ≥ 1 and d ≥ 2, got n = {n}, d = {d}")));
    }
    if d - 1 > MAX_N {
        return Err(RmtError::Budget { n: d - 1, limit: MAX_N });
    }
    let alpha = n as f64 / d as f64;
    let mut x = vec![0.0; d];
    x[0] = q.sqrt();
    let opts = MapOptions { storage: Storage::OnDemand, ..Default::default() };
    let out = map_indexed(trials, |t| -> Result<HessianTrial, RmtError> {
        let map = GaussianMap::sample_with(xi, n, d, derive_seed(seed, &[HESSIAN_STREAM, t as u64]), opts)?;
        let p = map.point_on_support(&x, &[0])?;
        // x ∥ e₁, so the tangent space is spanned by e₂..e_d
        let h = p.hessian().view((1, 1), (d - 1, d - 1)).clone_owned();
        let lmin = lambda_min(&h, EigenPath::for_size(d - 1), derive_seed(seed, &[LANCZOS_STREAM, t as u64]))?;
        let e = p.energy() / n as f64;
        let a = (2.0 * alpha * xi.d2(q) * e).sqrt();
        Ok(HessianTrial { lambda_min: lmin / d as f64, predicted: -z_star(alpha, a, xi.d1(q)), energy_per_n: e })
    });
    let trials = out.into_iter().collect::<Result<Vec<_>, _>>()?;
    let target = xi.value(q) / 2.0;
    Ok(HessianLawReport { n, d, q, trials, energy_target: target, energy_sd: target * (2.0 / n as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goe_diagonal_has_double_variance() {
        let spec = EnsembleSpec::with_alpha(400, 0.5, 1.0, 0.0, 3);
        let a = sample_matrix(&spec, 0);
        let s = 400f64;
        let diag: f64 = (0..400).map(|i| a[(i, i)].powi(2)).sum::<f64>() / 400.0 / s;
        let off: f64 = (0..399).map(|i| a[(i, i + 1)].powi(2)).sum::<f64>() / 399.0 / s;
        assert!((diag - 2.0).abs() < 0.4 && (off - 1.0).abs() < 0.2, "{diag} {off}");
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn wishart_without_noise_is_rank_deficient() {
        let spec = EnsembleSpec::with_alpha(120, 0.5, 0.0, 1.0, 1);
        let s = sample_edge(&spec, 2).unwrap();
        assert!(s.samples.iter().all(|v| v.abs() < 1e-10), "{:?}", s.samples);
        assert_eq!(s.predicted, 0.0);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let spec = EnsembleSpec::with_alpha(300, 0.5, 1.0, 1.0, 5);
        let a = sample_edge_with(&spec, 2, EigenPath::Dense).unwrap();
        let b = sample_edge_with(&spec, 2, EigenPath::Lanczos).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).abs() < 1e-6 * x.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn semicircle_edge_and_cdf() {
        let spec = EnsembleSpec::with_alpha(600, 0.5, 1.0, 0.0, 2);
        let s = sample_edge(&spec, 2).unwrap();
        assert!((s.mean + 2.0).abs() < 0.08, "{}", s.mean);
        let grid: Vec<f64> = (0..=80).map(|i| -2.4 + 0.06 * i as f64).collect();
        let emp = spectral_cdf(&spec, &grid).unwrap();
        let lim = limit_cdf(0.5, 1.0, 0.0, &grid, 800).unwrap();
        assert!(emp.windows(2).all(|w| w[1] >= w[0]));
        assert!((emp[80] - 1.0).abs() < 1e-12 && (lim[80] - 1.0).abs() < 2e-3);
        assert!(kolmogorov_distance(&emp, &lim) < 0.03);
    }

    #[test]
    fn oversized_ensembles_rejected() {
        let spec = EnsembleSpec::with_alpha(MAX_N + 1, 0.5, 1.0, 1.0, 0);
        assert!(matches!(sample_edge(&spec, 1), Err(RmtError::Budget { .. })));
    }

    #[test]
    fn linear_map_hessian_is_psd() {
        let r = verify_hessian_law(&MixtureXi::parse("0,1").unwrap(), 20, 40, 0.5, 2, 1).unwrap();
        for t in &r.trials {
            assert!(t.lambda_min * 40.0 >= -1e-10, "{}", t.lambda_min);
            assert_eq!(t.predicted, 0.0);
        }
    }
}
