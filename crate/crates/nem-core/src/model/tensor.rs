//! Contractions of a flat row-major order-`k` tensor with side `d` against a
//! vector, for the polynomial `p(x) = ⟨T, x^{⊗k}⟩` and its derivatives.
//! Slots are not assumed symmetric.

use std::borrow::Cow;

use nalgebra::DMatrix;

/// Contract the last slot: `out[o] = Σ_m t[o·d + m] x[m]`.
pub fn contract_last(t: &[f64], d: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(t.len(), out.len() * d);
    for (o, row) in out.iter_mut().zip(t.chunks_exact(d)) {
        *o = dot(row, x);
    }
}

/// Contract the first slot: `out[i] = Σ_m x[m] t[m·inner + i]`.
pub fn contract_first(t: &[f64], d: usize, x: &[f64], out: &mut [f64]) {
    let inner = out.len();
    debug_assert_eq!(t.len(), inner * d);
    out.iter_mut().for_each(|v| *v = 0.0);
    for (m, block) in t.chunks_exact(inner).enumerate() {
        let w = x[m];
        if w == 0.0 {
            continue;
        }
        for (o, b) in out.iter_mut().zip(block) {
            *o += w * b;
        }
    }
}

/// Contract slot `pos` of a rank-`rank` tensor.
pub fn contract_at(t: &[f64], d: usize, rank: usize, pos: usize, x: &[f64]) -> Vec<f64> {
    let inner = d.pow((rank - pos - 1) as u32);
    let outer = d.pow(pos as u32);
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        let src = &t[o * d * inner..(o + 1) * d * inner];
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (m, block) in src.chunks_exact(inner).enumerate() {
            let w = x[m];
            if w == 0.0 {
                continue;
            }
            for (a, b) in dst.iter_mut().zip(block) {
                *a += w * b;
            }
        }
    }
    out
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let n = a.len().min(b.len());
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for i in 4 * chunks..n {
        s0 += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3)
}

/// Trailing partial contractions: `stages[j]` has rank `j` and equals `T`
/// contracted with `x` on slots `j..k`. `stages[k]` is left empty (it is `t`).
fn trailing_stages(t: &[f64], k: usize, d: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let mut stages: Vec<Vec<f64>> = vec![Vec::new(); k + 1];
    for j in (0..k).rev() {
        let len = d.pow(j as u32);
        let mut out = vec![0.0; len];
        let src: &[f64] = if j + 1 == k { t } else { &stages[j + 1] };
        contract_last(src, d, x, &mut out);
        stages[j] = out;
    }
    stages
}

/// Value of `p(x) = ⟨T, x^{⊗k}⟩`.
pub fn poly_value(t: &[f64], k: usize, d: usize, x: &[f64]) -> f64 {
    if k == 0 {
        return t[0];
    }
    let mut cur = vec![0.0; t.len() / d];
    contract_last(t, d, x, &mut cur);
    for _ in 1..k {
        let mut next = vec![0.0; cur.len() / d];
        contract_last(&cur, d, x, &mut next);
        cur = next;
    }
    cur[0]
}

/// Value and gradient of `p(x) = ⟨T, x^{⊗k}⟩`.
pub fn poly_value_grad(t: &[f64], k: usize, d: usize, x: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; d];
    if k == 0 {
        return (t[0], grad);
    }
    let stages = trailing_stages(t, k, d, x);
    let value = stages[0][0];
    for s in 0..k {
        // free slot s: leading slots 0..s still open in stages[s+1]
        let base: &[f64] = if s + 1 == k { t } else { &stages[s + 1] };
        let cur = contract_leading(base, d, x, s);
        for (g, c) in grad.iter_mut().zip(cur.iter()) {
            *g += c;
        }
    }
    (value, grad)
}

/// Contract the first `times` slots of `t` with `x`.
fn contract_leading<'a>(t: &'a [f64], d: usize, x: &[f64], times: usize) -> Cow<'a, [f64]> {
    let mut cur = Cow::Borrowed(t);
    for _ in 0..times {
        let mut next = vec![0.0; cur.len() / d];
        contract_first(&cur, d, x, &mut next);
        cur = Cow::Owned(next);
    }
    cur
}

/// Hessian of `p(x) = ⟨T, x^{⊗k}⟩`.
pub fn poly_hessian(t: &[f64], k: usize, d: usize, x: &[f64]) -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(d, d);
    if k < 2 {
        return h;
    }
    let stages = trailing_stages(t, k, d, x);
    for u in 1..k {
        let base: &[f64] = if u + 1 == k { t } else { &stages[u + 1] };
        for s in 0..u {
            // slots 0..=u open; contract everything but s and u
            let mut cur = contract_leading(base, d, x, s);
            let mut rank = u + 1 - s;
            // now slots s..=u, free slot first, free slot last
            while rank > 2 {
                cur = Cow::Owned(contract_at(&cur, d, rank, 1, x));
                rank -= 1;
            }
            for a in 0..d {
                for b in 0..d {
                    let v = cur[a * d + b];
                    h[(a, b)] += v;
                    h[(b, a)] += v;
                }
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_value(t: &[f64], k: usize, d: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (flat, v) in t.iter().enumerate() {
            let mut w = 1.0;
            let mut r = flat;
            for _ in 0..k {
                w *= x[r % d];
                r /= d;
            }
            s += v * w;
        }
        s
    }

    fn sample(k: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
        let s = crate::rng::NormalStream::new(3, k as u64);
        let mut t = vec![0.0; d.pow(k as u32)];
        s.fill(0, &mut t);
        let x: Vec<f64> = (0..d).map(|i| 0.3 * ((i as f64) * 1.7).sin() + 0.1).collect();
        (t, x)
    }

    #[test]
    fn value_matches_brute_force() {
        for k in 0..5 {
            let d = 4;
            let (t, x) = sample(k, d);
            let (v, _) = poly_value_grad(&t, k, d, &x);
            assert!((v - brute_value(&t, k, d, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_and_hessian_match_differences() {
        let h = 1e-5;
        for k in 1..5 {
            let d = 5;
            let (t, x) = sample(k, d);
            let (_, g) = poly_value_grad(&t, k, d, &x);
            let hess = poly_hessian(&t, k, d, &x);
            for a in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += h;
                xm[a] -= h;
                let fd = (brute_value(&t, k, d, &xp) - brute_value(&t, k, d, &xm)) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-8, "k={k} a={a}");
                let (_, gp) = poly_value_grad(&t, k, d, &xp);
                let (_, gm) = poly_value_grad(&t, k, d, &xm);
                for b in 0..d {
                    let fd2 = (gp[b] - gm[b]) / (2.0 * h);
                    assert!((fd2 - hess[(a, b)]).abs() < 1e-7, "k={k} a={a} b={b}");
                }
            }
        }
    }
}
