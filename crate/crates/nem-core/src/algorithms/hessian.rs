use rand::Rng;

use super::{AlgoError, RunTrace, Solution};
use crate::linalg::{axpy, dot, gaussian_vec, lanczos_min, norm, norm_sq, scale, unit_random};
use crate::model::{ConstraintSubspace, GaussianMap, PointEval};
use crate::rng::stream_rng;

const HD_STREAM: u64 = 0x6864;
const LANCZOS_STREAM: u64 = 0x6c7a;

#[derive(Clone, Debug)]
pub struct EigenDirection {
    pub v: Vec<f64>,
    /// `⟨v, ∇²H v⟩`.
    pub rayleigh: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Unit vector in `subspace` whose Rayleigh quotient is within `tol_abs` of
/// the smallest eigenvalue of the restricted Hessian, certified by the
/// Lanczos residual.
pub fn min_eig_direction(
    map: &GaussianMap,
    x: &[f64],
    subspace: &ConstraintSubspace,
    tol_abs: f64,
    max_lanczos: usize,
    seed: u64,
) -> Result<EigenDirection, AlgoError> {
    let p = map.point_with_hessian(x)?;
    min_eig_direction_at(&p, subspace, tol_abs, max_lanczos, seed)
}

/// [`min_eig_direction`] for an already evaluated point.
pub fn min_eig_direction_at(
    p: &PointEval,
    subspace: &ConstraintSubspace,
    tol_abs: f64,
    max_lanczos: usize,
    seed: u64,
) -> Result<EigenDirection, AlgoError> {
    if !(tol_abs > 0.0) {
        return Err(AlgoError::InvalidParameter(format!("eigen tolerance must be positive, got {tol_abs}")));
    }
    let d = p.x.len();
    let h = p.hessian();
    let mut rng = stream_rng(seed, &[LANCZOS_STREAM]);
    let start = gaussian_vec(&mut rng, d);
    let apply = |v: &[f64]| {
        let mut w = vec![0.0; d];
        for (j, vj) in v.iter().enumerate() {
            if *vj != 0.0 {
                axpy(*vj, h.column(j).as_slice(), &mut w);
            }
        }
        w
    };
    let r = lanczos_min(apply, |v: &mut [f64]| subspace.project_in_place(v), subspace.dim(), start, tol_abs, max_lanczos, || {
        gaussian_vec(&mut rng, d)
    })?;
    let mut v = r.vector;
    subspace.project_in_place(&mut v);
    let l = norm(&v);
    scale(1.0 / l, &mut v);
    let hv = apply(&v);
    Ok(EigenDirection { rayleigh: dot(&v, &hv), v, residual: r.residual, iterations: r.iterations })
}

#[derive(Clone, Debug)]
pub struct HdOptions {
    pub delta: f64,
    pub seed: u64,
    /// Eigenvector slack in units of `d·δ`.
    pub tol_factor: f64,
    /// Lanczos steps per restart; `None` means `40·ln(1/δ)`.
    pub max_lanczos: Option<usize>,
    /// Extra orthogonality constraints (phase two uses `[m^L]`).
    pub extras: Vec<Vec<f64>>,
    /// Entry point; `x¹ = √δ·(uniform unit vector)` if absent.
    pub start: Option<Vec<f64>>,
}

impl HdOptions {
    pub fn new(delta: f64, seed: u64) -> Self {
        HdOptions { delta, seed, tol_factor: 1.0, max_lanczos: None, extras: Vec::new(), start: None }
    }
}

/// Hessian descent: `K` radial steps of length `√δ` along near-minimal
/// eigenvectors of the Hessian restricted to the tangent space (and the
/// extra constraints), with the sign chosen against the gradient. The
/// endpoint is normalized to the unit sphere.
pub fn hessian_descent(map: &GaussianMap, opts: &HdOptions) -> Result<Solution, AlgoError> {
    let delta = opts.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AlgoError::InvalidParameter(format!("δ must lie in (0, 1), got {delta}")));
    }
    let d = map.d();
    let n = map.n() as f64;
    let sd = delta.sqrt();
    let tol = opts.tol_factor * d as f64 * delta;
    let max_lanczos = opts.max_lanczos.unwrap_or_else(|| (40.0 * (1.0 / delta).ln()).ceil() as usize).max(2);
    let mut rng = stream_rng(opts.seed, &[HD_STREAM]);
    let (mut x, steps) = match &opts.start {
        Some(s) => {
            if s.len() != d {
                return Err(AlgoError::InvalidParameter("start must have length d".into()));
            }
            let r0 = norm_sq(s);
            if r0 >= 1.0 {
                return Err(AlgoError::InvalidParameter(format!("start must lie inside the unit ball, ‖start‖² = {r0}")));
            }
            (s.clone(), ((1.0 - r0) / delta + 1e-9).floor() as usize)
        }
        None => {
            let mut x = unit_random(&mut rng, d);
            scale(sd, &mut x);
            // x¹ already carries one step of radius
            (x, ((1.0 / delta + 1e-9).floor() as usize).saturating_sub(1))
        }
    };
    let mut trace = RunTrace::new("hd");
    let r_start = norm_sq(&x);
    for k in 0..steps {
        let p = map.point_with_hessian(&x)?;
        // a zero start (γ = 0 phase one) is rejected here as a zero anchor
        let sub = ConstraintSubspace::spanning(&x, &opts.extras)?;
        let e = min_eig_direction_at(&p, &sub, tol, max_lanczos, rng.random())?;
        let g = p.grad();
        let vg = dot(&e.v, &g);
        let s = if vg >= 0.0 { 1.0 } else { -1.0 };
        trace.push(
            k,
            k as f64 * delta,
            norm_sq(&x),
            p.energy() / n,
            &[("rayleigh", e.rayleigh), ("first_order", -s * sd * vg), ("lanczos_iters", e.iterations as f64)],
        );
        axpy(-s * sd, &e.v, &mut x);
    }
    let (_, h_end) = map.eval(&x)?;
    trace.push(steps, steps as f64 * delta, norm_sq(&x), h_end / n, &[]);
    let l = norm(&x);
    scale(1.0 / l, &mut x);
    let (_, h) = map.eval(&x)?;
    trace.push(steps + 1, steps as f64 * delta, 1.0, h / n, &[("normalized", 1.0), ("start_radius_sq", r_start)]);
    Ok(Solution { x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_min_eigen;
    use crate::model::MixtureXi;

    #[test]
    fn eigen_direction_matches_dense() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,0.5,0.5,1").unwrap(), 20, 40, 7).unwrap();
        let x: Vec<f64> = unit_random(&mut stream_rng(1, &[]), 40).iter().map(|v| v * 0.7).collect();
        let extra = unit_random(&mut stream_rng(2, &[]), 40);
        let sub = ConstraintSubspace::new(&x, &[extra.clone()]).unwrap();
        let tol = 40.0 * 0.02;
        let e = min_eig_direction(&map, &x, &sub, tol, 200, 3).unwrap();
        let p = map.point_with_hessian(&x).unwrap();
        let u = sub.complement_basis();
        let restricted = u.transpose() * p.hessian() * &u;
        let (lmin, _) = dense_min_eigen(&restricted);
        assert!(e.rayleigh >= lmin - 1e-9 && e.rayleigh <= lmin + tol, "{} vs {}", e.rayleigh, lmin);
        assert!(dot(&e.v, &x).abs() <= 1e-10 && dot(&e.v, &extra).abs() <= 1e-10);
        assert!((norm(&e.v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_hessian_is_psd() {
        let map = GaussianMap::sample(&MixtureXi::parse("0,1").unwrap(), 10, 30, 5).unwrap();
        let x = unit_random(&mut stream_rng(9, &[]), 30);
        let sub = ConstraintSubspace::tangent(&x).unwrap();
        let e = min_eig_direction(&map, &x, &sub, 0.3, 100, 1).unwrap();
        assert!(e.rayleigh >= -0.3);
    }

    #[test]
    fn radius_grows_by_delta() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,0,0,1").unwrap(), 10, 25, 4).unwrap();
        let s = hessian_descent(&map, &HdOptions::new(0.05, 8)).unwrap();
        let steps: Vec<_> = s.trace.records.iter().filter(|r| !r.aux.contains_key("normalized")).collect();
        assert_eq!(steps.len(), 20);
        for w in steps.windows(2) {
            assert!((w[1].radius_sq - w[0].radius_sq - 0.05).abs() < 1e-12);
        }
        for r in &steps[..steps.len() - 1] {
            assert!(r.aux["first_order"] <= 0.0);
        }
        assert!((norm(&s.x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_replay() {
        let map = GaussianMap::sample(&MixtureXi::parse("1,0,1,1").unwrap(), 8, 16, 4).unwrap();
        let a = hessian_descent(&map, &HdOptions::new(0.1, 3)).unwrap();
        let b = hessian_descent(&map, &HdOptions::new(0.1, 3)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.trace, b.trace);
    }
}
