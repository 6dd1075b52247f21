use serde::Serialize;

use super::TheoryError;
use crate::model::MixtureXi;

pub const PARISI_DEFAULT_GRID: usize = 200;
const MAX_ITERS: usize = 400_000;

#[derive(Clone, Debug, Serialize)]
pub struct ParisiResult {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Ground-state energy `E_*(ξ)` of the spherical process with covariance ξ,
/// from the zero-temperature variational formula
/// `½[ξ'(0)Γ(0) + ∫₀¹(ξ''Γ + 1/Γ)]` minimized over concave non-increasing
/// `Γ > 0` (`γ = −Γ'` non-decreasing).
///
/// `Γ` lives on `grid_n` cell midpoints and is parametrized by `Γ(1) ≥ 0`
/// and the non-negative increments of `γ`, so the feasible set is an orthant
/// and the objective stays convex. Minimization is accelerated projected
/// gradient with backtracking and adaptive restart.
pub fn e_star_parisi(xi: &MixtureXi, grid_n: usize) -> Result<ParisiResult, TheoryError> {
    if grid_n < 4 {
        return Err(TheoryError::Domain("Parisi grid needs at least 4 cells".into()));
    }
    let d1 = xi.d1(0.0);
    if xi.is_affine() {
        if d1 <= 0.0 {
            return Err(TheoryError::Hypothesis("ξ − ξ(0) vanishes identically".into()));
        }
        return Ok(ParisiResult { value: d1.sqrt(), converged: true, iterations: 0 });
    }
    let n = grid_n;
    let h = 1.0 / n as f64;
    let x2: Vec<f64> = (0..n).map(|j| xi.d2((j as f64 + 0.5) * h)).collect();

    // pointwise optimum when it is already feasible
    if d1 == 0.0 && x2.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-14 * w[0].abs().max(1.0)) {
        let v = x2.iter().map(|v| v.sqrt()).sum::<f64>() * h;
        return Ok(ParisiResult { value: v, converged: true, iterations: 0 });
    }

    let gamma_of = |z: &[f64], out: &mut [f64]| {
        // z = (a_0..a_{n-1}, b)
        let b = z[n];
        let mut g = 0.0;
        let mut gam = vec![0.0; n];
        for j in 0..n {
            g += z[j];
            gam[j] = g;
        }
        let mut tail = 0.0;
        for j in (0..n).rev() {
            out[j] = b + h * (0.5 * gam[j] + tail);
            tail += gam[j];
        }
        b + h * tail
    };
    let objective = |z: &[f64], gbuf: &mut [f64]| -> f64 {
        let g0 = gamma_of(z, gbuf);
        let mut s = d1 * g0;
        for j in 0..n {
            if gbuf[j] <= 0.0 {
                return f64::INFINITY;
            }
            s += h * (x2[j] * gbuf[j] + 1.0 / gbuf[j]);
        }
        0.5 * s
    };
    let gradient = |z: &[f64], gbuf: &mut [f64], grad: &mut [f64]| {
        gamma_of(z, gbuf);
        let gj: Vec<f64> = (0..n).map(|j| 0.5 * h * (x2[j] - 1.0 / (gbuf[j] * gbuf[j]))).collect();
        grad[n] = gj.iter().sum::<f64>() + 0.5 * d1;
        let mut dgamma = vec![0.0; n];
        let mut head = 0.0;
        for i in 0..n {
            dgamma[i] = h * (0.5 * gj[i] + head) + 0.5 * d1 * h;
            head += gj[i];
        }
        let mut acc = 0.0;
        for l in (0..n).rev() {
            acc += dgamma[l];
            grad[l] = acc;
        }
    };

    let mut gbuf = vec![0.0; n];
    let mut z = vec![0.0; n + 1];
    let mean2 = x2.iter().sum::<f64>() / n as f64;
    z[n] = 1.0 / mean2.sqrt();
    let mut y = z.clone();
    let mut f_z = objective(&z, &mut gbuf);
    let mut t = 1.0f64;
    let mut step = 1.0f64;
    let mut grad = vec![0.0; n + 1];
    let mut cand = vec![0.0; n + 1];
    let mut stall = 0;
    let mut iters = 0;
    let mut converged = false;
    while iters < MAX_ITERS {
        iters += 1;
        gradient(&y, &mut gbuf, &mut grad);
        let f_y = objective(&y, &mut gbuf);
        // backtracking on the projected step from y
        loop {
            for i in 0..=n {
                cand[i] = (y[i] - step * grad[i]).max(0.0);
            }
            let f_c = objective(&cand, &mut gbuf);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..=n {
                let dlt = cand[i] - y[i];
                lin += grad[i] * dlt;
                sq += dlt * dlt;
            }
            if f_c.is_finite() && f_c <= f_y + lin + sq / (2.0 * step) {
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                break;
            }
        }
        let f_c = objective(&cand, &mut gbuf);
        let improvement = f_z - f_c;
        if f_c > f_z {
            // adaptive restart
            t = 1.0;
            y.copy_from_slice(&z);
            step *= 0.5;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        for i in 0..=n {
            y[i] = (cand[i] + (t - 1.0) / t_next * (cand[i] - z[i])).max(0.0);
        }
        z.copy_from_slice(&cand);
        f_z = f_c;
        t = t_next;
        step *= 1.2;
        if improvement.abs() <= 1e-15 * f_z.abs().max(1.0) {
            stall += 1;
            if stall >= 200 {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    Ok(ParisiResult { value: f_z, converged, iterations: iters })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_mixture_is_sqrt2() {
        let r = e_star_parisi(&MixtureXi::parse("0,0,1").unwrap(), 200).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linear_mixture_is_sqrt_slope() {
        let r = e_star_parisi(&MixtureXi::parse("3,4").unwrap(), 200).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn cubic_converges_and_is_grid_stable() {
        let xi = MixtureXi::parse("0,0,0,1").unwrap();
        let a = e_star_parisi(&xi, 200).unwrap();
        let b = e_star_parisi(&xi, 400).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.value / b.value - 1.0).abs() < 5e-3, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn descent_path_matches_feasible_optimum() {
        // ξ = t + t²: constant Γ = L is feasible with value ½(3L + 1/L)
        let xi = MixtureXi::parse("0,1,1").unwrap();
        let r = e_star_parisi(&xi, 200).unwrap();
        let direct = (0..20000).map(|i| {
            let l = 0.01 + i as f64 * 1e-4;
            0.5 * (3.0 * l + 1.0 / l)
        }).fold(f64::INFINITY, f64::min);
        assert!(r.value <= direct + 1e-6, "{} vs {}", r.value, direct);
    }
}
