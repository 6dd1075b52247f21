/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of the tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (length `diag.len() − 1`), by Sturm bisection.
pub fn tridiag_min_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 >= n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest eigenpair of a symmetric tridiagonal matrix. The eigenvector is
/// obtained by inverse iteration with a shift just below the eigenvalue, so
/// the shifted matrix is positive definite and the Thomas sweep is stable.
pub fn tridiag_min_eigen(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let n = diag.len();
    let lambda = tridiag_min_eigenvalue(diag, off);
    if n == 1 {
        return (lambda, vec![1.0]);
    }
    let scale = diag.iter().chain(off.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let sigma = lambda - 1e-10 * scale;
    let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i as f64).sin()).collect();
    let mut c = vec![0.0; n];
    let mut dd = vec![0.0; n];
    for _ in 0..3 {
        // forward elimination on (T − σI) y' = y
        dd[0] = diag[0] - sigma;
        let mut rhs = y.clone();
        for i in 1..n {
            let m = off[i - 1] / dd[i - 1];
            c[i] = m;
            dd[i] = diag[i] - sigma - m * off[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut sol = vec![0.0; n];
        sol[n - 1] = rhs[n - 1] / dd[n - 1];
        for i in (0..n - 1).rev() {
            sol[i] = (rhs[i] - off[i] * sol[i + 1]) / dd[i];
        }
        let nrm = sol.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        y = sol.iter().map(|v| v / nrm).collect();
    }
    (lambda, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn matches_dense_solver() {
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 - 4.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 3) % 5) as f64 * 0.3).collect();
        let t = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let (lam, v) = tridiag_min_eigen(&diag, &off);
        let (dl, _) = crate::linalg::dense_min_eigen(&t);
        assert!((lam - dl).abs() < 1e-12);
        let tv = &t * nalgebra::DVector::from_vec(v.clone());
        let res: f64 = tv.iter().zip(&v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-9, "residual {res}");
    }

    #[test]
    fn decoupled_blocks() {
        let (lam, v) = tridiag_min_eigen(&[3.0, -1.0, 2.0], &[0.0, 0.0]);
        assert!((lam + 1.0).abs() < 1e-14);
        assert!((v[1].abs() - 1.0).abs() < 1e-12);
    }
}
