//! Small dense vector helpers and the Lanczos eigensolver.

mod lanczos;
mod tridiag;

pub use lanczos::{lanczos_min, LanczosError, LanczosResult};
pub use tridiag::{tridiag_min_eigen, tridiag_min_eigenvalue};

use rand::Rng;
use rand_distr::StandardNormal;

pub use crate::model::tensor::dot;

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += c·x`.
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub fn scale(c: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= c);
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform point on the unit sphere `S^{d-1}`.
pub fn unit_random<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut g = gaussian_vec(rng, d);
        let n = norm(&g);
        if n > 0.0 {
            scale(1.0 / n, &mut g);
            return g;
        }
    }
}

/// Smallest eigenvalue of a dense symmetric matrix with its eigenvector.
pub fn dense_min_eigen(a: &nalgebra::DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = a.clone().symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    (val, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Sorted eigenvalues of a dense symmetric matrix.
pub fn dense_eigenvalues(a: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
