//! Spectral edge and Stieltjes transform of `A = a√N W + b ZᵀZ` (in units
//! of `N`), with `W` a GOE matrix and `Z` an `αN × N` Gaussian matrix.

use num_complex::Complex64;

use super::numeric::golden_max;
use super::TheoryError;

/// `Q(m; α, a, b) = −1/m + αb/(1+bm) − a²m`.
pub fn q_of_m(m: f64, alpha: f64, a: f64, b: f64) -> f64 {
    -1.0 / m + alpha * b / (1.0 + b * m) - a * a * m
}

fn dq(m: f64, alpha: f64, a: f64, b: f64) -> f64 {
    let s = 1.0 + b * m;
    1.0 / (m * m) - alpha * b * b / (s * s) - a * a
}

/// Left spectral edge `z_*(α, a, b) = −sup_{m>0} Q(m)`.
pub fn z_star(alpha: f64, a: f64, b: f64) -> f64 {
    let a = a.abs();
    let b = b.abs();
    if b == 0.0 {
        return 2.0 * a;
    }
    if a == 0.0 {
        return if alpha <= 1.0 { 0.0 } else { -b * (alpha.sqrt() - 1.0).powi(2) };
    }
    if alpha <= 1.0 {
        // Q is strictly concave: Q' decreases from +∞ to −a²
        let mut lo = 1.0f64;
        while dq(lo, alpha, a, b) <= 0.0 {
            lo *= 0.5;
        }
        let mut hi = lo * 2.0;
        while dq(hi, alpha, a, b) > 0.0 {
            hi *= 2.0;
        }
        let (mut l, mut h) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let mid = 0.5 * (l + h);
            if dq(mid.exp(), alpha, a, b) > 0.0 {
                l = mid;
            } else {
                h = mid;
            }
            if h - l < 1e-15 {
                break;
            }
        }
        return -q_of_m((0.5 * (l + h)).exp(), alpha, a, b);
    }
    // α > 1: Q' = 0 exactly where (1+bm)²(1−a²m²) = αb²m², a quartic; the
    // sup is the best local maximum among its positive real roots
    let c = [1.0, 2.0 * b, b * b * (1.0 - alpha) - a * a, -2.0 * a * a * b, -a * a * b * b];
    let p = |m: f64| c.iter().rev().fold(0.0, |acc, ci| acc * m + ci);
    let dp = |m: f64| c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, ci)| acc * m + k as f64 * ci);
    let cz: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut best = f64::NEG_INFINITY;
    for r in poly_roots(&cz) {
        if r.im.abs() > 1e-6 * (1.0 + r.re.abs()) || r.re <= 0.0 {
            continue;
        }
        let mut m = r.re;
        for _ in 0..4 {
            let d = dp(m);
            if d == 0.0 {
                break;
            }
            m -= p(m) / d;
        }
        if m > 0.0 {
            best = best.max(q_of_m(m, alpha, a, b));
        }
    }
    if best.is_finite() {
        -best
    } else {
        -sup_q_scan(alpha, a, b)
    }
}

/// `sup Q` by a log-grid scan and golden refinement; slow but assumption-free.
fn sup_q_scan(alpha: f64, a: f64, b: f64) -> f64 {
    let (lo, hi, k) = (-20.0f64, 20.0f64, 800);
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=k {
        let l = lo + (hi - lo) * i as f64 / k as f64;
        let v = q_of_m(l.exp(), alpha, a, b);
        if v > best.1 {
            best = (l, v);
        }
    }
    let step = (hi - lo) / k as f64;
    let (_, v) = golden_max(|l| q_of_m(l.exp(), alpha, a, b), best.0 - step, best.0 + step, 120);
    v.max(best.1)
}

fn poly_eval(c: &[Complex64], x: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, ci| acc * x + ci)
}

/// Roots of `Σ c_k x^k` (lowest degree first, leading coefficient non-zero).
fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let deg = c.len() - 1;
    let lead = c[deg];
    let monic: Vec<Complex64> = c.iter().map(|v| v / lead).collect();
    match deg {
        1 => vec![-monic[0]],
        2 => {
            let (p, q) = (monic[1], monic[0]);
            let disc = (p * p - 4.0 * q).sqrt();
            // stable pairing
            let r1 = if (-p + disc).norm() >= (-p - disc).norm() { (-p + disc) / 2.0 } else { (-p - disc) / 2.0 };
            let r2 = if r1.norm() > 0.0 { q / r1 } else { Complex64::new(0.0, 0.0) };
            vec![r1, r2]
        }
        _ => {
            let bound = 1.0 + monic[..deg].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let seed = Complex64::new(0.4, 0.9);
            let mut r: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * bound).collect();
            for _ in 0..500 {
                let mut delta = 0.0f64;
                for i in 0..deg {
                    let mut den = Complex64::new(1.0, 0.0);
                    for j in 0..deg {
                        if i != j {
                            den *= r[i] - r[j];
                        }
                    }
                    let step = poly_eval(&monic, r[i]) / den;
                    r[i] -= step;
                    delta = delta.max(step.norm() / r[i].norm().max(1e-300));
                }
                if delta < 1e-15 {
                    break;
                }
            }
            // Newton polish
            let dc: Vec<Complex64> = (1..=deg).map(|k| monic[k] * k as f64).collect();
            for ri in r.iter_mut() {
                for _ in 0..3 {
                    let dv = poly_eval(&dc, *ri);
                    if dv.norm() > 0.0 {
                        *ri -= poly_eval(&monic, *ri) / dv;
                    }
                }
            }
            r
        }
    }
}

fn candidate_roots(z: Complex64, alpha: f64, a: f64, b: f64) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let a2 = a * a;
    // Q(S) = z multiplied through by S(1+bS)
    let c0 = one;
    let c1 = b - alpha * b + z;
    let c2 = a2 + z * b;
    let c3 = Complex64::new(a2 * b, 0.0);
    let mut coeffs = vec![c0, c1, c2, c3];
    while coeffs.len() > 1 && coeffs[coeffs.len() - 1].norm() == 0.0 {
        coeffs.pop();
    }
    poly_roots(&coeffs)
}

/// Stieltjes transform `S(z) = ∫ ν(dλ)/(λ − z)` of the limiting spectral
/// law of `A/N`, for `Im z > 0`. The branch is followed from `z + iY` (where
/// `S ≈ −1/z`) down a vertical path.
pub fn stieltjes(z: Complex64, alpha: f64, a: f64, b: f64) -> Result<Complex64, TheoryError> {
    if !(z.im > 0.0) {
        return Err(TheoryError::Domain(format!("Stieltjes transform needs Im z > 0, got {z}")));
    }
    let scale = 1.0 + 2.0 * a.abs() + b.abs() * (1.0 + alpha.sqrt()).powi(2) + z.norm();
    let top = 1e3 * scale;
    if z.im >= top {
        return nearest(candidate_roots(z, alpha, a, b), -1.0 / z);
    }
    let steps = 400;
    let (l0, l1) = (top.ln(), z.im.ln());
    let mut prev = -1.0 / Complex64::new(z.re, top);
    for i in 0..=steps {
        let im = (l0 + (l1 - l0) * i as f64 / steps as f64).exp();
        let zz = Complex64::new(z.re, im);
        prev = nearest(candidate_roots(zz, alpha, a, b), prev)?;
    }
    Ok(prev)
}

fn nearest(roots: Vec<Complex64>, target: Complex64) -> Result<Complex64, TheoryError> {
    let mut d: Vec<(f64, Complex64)> = roots.into_iter().map(|r| ((r - target).norm(), r)).collect();
    d.sort_by(|x, y| x.0.total_cmp(&y.0));
    if d.len() > 1 && (d[1].1 - d[0].1).norm() <= 1e-12 * (1.0 + d[0].1.norm()) && d[0].1.im.abs() > 1e-9 {
        return Err(TheoryError::BranchAmbiguity);
    }
    Ok(d[0].1)
}

/// Limiting spectral density of `A/N` at `x`.
pub fn spectral_density(x: f64, alpha: f64, a: f64, b: f64) -> Result<f64, TheoryError> {
    Ok(stieltjes(Complex64::new(x, 1e-9), alpha, a, b)?.im.max(0.0) / std::f64::consts::PI)
}

/// Support bracket `[lo, hi]` containing the limiting spectrum of `A/N`.
pub fn support_bracket(alpha: f64, a: f64, b: f64) -> (f64, f64) {
    (-2.0 * a - 1e-9, 2.0 * a + b * (1.0 + alpha.sqrt()).powi(2) + 1e-9)
}
