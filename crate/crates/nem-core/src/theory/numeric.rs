//! Scalar root finding, 1-D optimization and quadrature.

use super::TheoryError;

pub const BISECT_ITERS: usize = 80;

/// Boundary of a monotone predicate on `[lo, hi]`: `pred(lo)` is false,
/// `pred(hi)` is true. Returns the midpoint of the final bracket.
pub fn bisect_predicate(mut pred: impl FnMut(f64) -> bool, lo: f64, hi: f64) -> Result<f64, TheoryError> {
    let (mut lo, mut hi) = (lo, hi);
    if pred(lo) {
        return Err(TheoryError::Bracket(format!("predicate already holds at the lower end {lo}")));
    }
    if !pred(hi) {
        return Err(TheoryError::BracketExhausted(hi));
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of `f` on `[lo, hi]` with a sign change.
pub fn bisect_root(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Result<f64, TheoryError> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(TheoryError::Bracket(format!("no sign change on [{lo}, {hi}]: {flo}, {fhi}")));
    }
    let up = fhi > 0.0;
    bisect_predicate(|x| (f(x) > 0.0) == up, lo, hi)
}

/// Golden-section maximization on `[a, b]`; returns `(argmax, max)`.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximize over a uniform grid, then refine around the best grid point.
pub fn grid_golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let h = (hi - lo) / (grid - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..grid {
        let x = lo + h * i as f64;
        let v = f(x);
        if v > best.1 || best.1.is_nan() {
            best = (x, v);
        }
    }
    let a = (best.0 - h).max(lo);
    let b = (best.0 + h).min(hi);
    let refined = golden_max(&mut f, a, b, 100);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect_root(|x| x * x + 1.0, 0.0, 2.0).is_err());
        assert!(matches!(bisect_predicate(|x| x > 5.0, 0.0, 1.0), Err(TheoryError::BracketExhausted(_))));
    }

    #[test]
    fn golden_finds_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, 0.0, 1.0, 100);
        assert!((x - 0.3).abs() < 1e-8 && (v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_sqrt_singularity() {
        let v = integrate(|t| t.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }
}
