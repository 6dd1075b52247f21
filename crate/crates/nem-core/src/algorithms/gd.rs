use super::{AlgoError, RunTrace, Solution};
use crate::linalg::{axpy, dot, norm, norm_sq, scale, unit_random};
use crate::model::GaussianMap;
use crate::rng::stream_rng;

const GD_STREAM: u64 = 0x6764;

#[derive(Clone, Debug)]
pub struct GdOptions {
    pub eta: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop once `H = ‖F‖²/2` is at or below this.
    pub stop_energy: f64,
    /// Starting point (normalized); uniform on the sphere if absent.
    pub start: Option<Vec<f64>>,
}

/// Projected gradient descent on the sphere: step along the tangent
/// gradient, then renormalize.
pub fn gradient_descent(map: &GaussianMap, opts: &GdOptions) -> Result<Solution, AlgoError> {
    if !(opts.eta > 0.0) {
        return Err(AlgoError::InvalidParameter(format!("step size must be positive, got {}", opts.eta)));
    }
    let (n, d) = (map.n() as f64, map.d());
    let mut x = match &opts.start {
        Some(s) => {
            let mut s = s.clone();
            let l = norm(&s);
            if s.len() != d || l == 0.0 {
                return Err(AlgoError::InvalidParameter("start must be a non-zero vector of length d".into()));
            }
            scale(1.0 / l, &mut s);
            s
        }
        None => unit_random(&mut stream_rng(opts.seed, &[GD_STREAM]), d),
    };
    let mut trace = RunTrace::new("gd");
    for k in 0..=opts.max_iters {
        let p = map.point(&x)?;
        let h = p.energy();
        let mut g = p.grad();
        let c = dot(&g, &x);
        axpy(-c, &x, &mut g);
        let gn = norm(&g);
        trace.push(k, k as f64, norm_sq(&x), h / n, &[("grad_norm", gn)]);
        if h <= opts.stop_energy || k == opts.max_iters {
            break;
        }
        axpy(-opts.eta, &g, &mut x);
        let l = norm(&x);
        scale(1.0 / l, &mut x);
    }
    Ok(Solution { x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureXi;

    #[test]
    fn constant_map_stays_put() {
        let map = GaussianMap::sample(&MixtureXi::parse("1").unwrap(), 4, 6, 3).unwrap();
        let s = gradient_descent(&map, &GdOptions { eta: 0.1, max_iters: 5, seed: 1, stop_energy: 0.0, start: None }).unwrap();
        let u0 = s.trace.records[0].u;
        assert!(s.trace.records.iter().all(|r| r.u == u0));
        let (f, _) = map.eval(&vec![0.0; 6]).unwrap();
        assert!((u0 - f.iter().map(|v| v * v).sum::<f64>() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn linear_map_reaches_null_space() {
        let map = GaussianMap::sample(&MixtureXi::parse("0,1").unwrap(), 5, 20, 11).unwrap();
        // λ_max(GᵀG) ≤ (√5 + √20)² ≈ 45
        let s = gradient_descent(&map, &GdOptions { eta: 0.01, max_iters: 5000, seed: 2, stop_energy: 1e-20, start: None }).unwrap();
        let us: Vec<f64> = s.trace.records.iter().map(|r| r.u).collect();
        let bad: Vec<_> = us.windows(2).enumerate().filter(|(_, w)| w[1] > w[0] * (1.0 + 1e-12)).take(3).collect();
        assert!(bad.is_empty(), "{bad:?} of {}", us.len());
        assert!(s.final_u() <= 1e-8, "{}", s.final_u());
        assert!((norm(&s.x) - 1.0).abs() < 1e-12);
    }
}
