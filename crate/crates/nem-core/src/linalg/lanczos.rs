use thiserror::Error;

use super::{axpy, dot, norm, tridiag_min_eigen};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LanczosError {
    #[error("Lanczos did not certify the smallest eigenpair after {restarts} restarts (residual {residual:.3e})")]
    NotConverged { restarts: usize, residual: f64 },
    #[error("Lanczos start vectors keep collapsing to zero after projection")]
    Breakdown,
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖A y − θ y‖` of the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
    pub restarts: usize,
}

const MAX_RESTARTS: usize = 3;

/// Smallest eigenpair of a symmetric operator on a subspace, by Lanczos with
/// full reorthogonalization.
///
/// `project` maps a vector into the subspace and `apply` must keep it
/// there. Stops once the Ritz residual is below `tol`, or the Krylov space is
/// exhausted (`dim` vectors or an invariant subspace). If `max_iter` steps do
/// not certify the pair, the run restarts from the current Ritz vector; more
/// than three restarts is an error. `fresh` supplies new start vectors when
/// one projects to zero.
pub fn lanczos_min(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    project: impl Fn(&mut [f64]),
    dim: usize,
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
    mut fresh: impl FnMut() -> Vec<f64>,
) -> Result<LanczosResult, LanczosError> {
    let mut start = start;
    let mut total = 0;
    let mut last_residual = f64::INFINITY;
    for restart in 0..=MAX_RESTARTS {
        let mut q0 = start.clone();
        project(&mut q0);
        let mut tries = 0;
        while norm(&q0) == 0.0 {
            tries += 1;
            if tries > MAX_RESTARTS {
                return Err(LanczosError::Breakdown);
            }
            q0 = fresh();
            project(&mut q0);
        }
        let n0 = norm(&q0);
        q0.iter_mut().for_each(|v| *v /= n0);

        let mut basis: Vec<Vec<f64>> = vec![q0];
        let mut diag: Vec<f64> = Vec::new();
        let mut off: Vec<f64> = Vec::new();
        let steps = max_iter.max(1).min(dim.max(1));
        for j in 0..steps {
            let mut w = apply(&basis[j]);
            project(&mut w);
            total += 1;
            let a = dot(&basis[j], &w);
            diag.push(a);
            axpy(-a, &basis[j], &mut w);
            if j > 0 {
                axpy(-off[j - 1], &basis[j - 1], &mut w);
            }
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let b = norm(&w);
            let (theta, s) = tridiag_min_eigen(&diag, &off);
            let residual = b * s[j].abs();
            let scale = diag.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
            let invariant = b <= 1e-12 * scale || b == 0.0;
            if residual <= tol || invariant || j + 1 == dim {
                let mut y = vec![0.0; basis[0].len()];
                for (si, q) in s.iter().zip(&basis) {
                    axpy(*si, q, &mut y);
                }
                project(&mut y);
                let yn = norm(&y);
                y.iter_mut().for_each(|v| *v /= yn);
                return Ok(LanczosResult { value: theta, vector: y, residual, iterations: total, restarts: restart });
            }
            if j + 1 == steps {
                let mut y = vec![0.0; basis[0].len()];
                for (si, q) in s.iter().zip(&basis) {
                    axpy(*si, q, &mut y);
                }
                start = y;
                last_residual = residual;
                break;
            }
            off.push(b);
            w.iter_mut().for_each(|v| *v /= b);
            basis.push(w);
        }
    }
    Err(LanczosError::NotConverged { restarts: MAX_RESTARTS, residual: last_residual })
}
