use nalgebra::{DMatrix, DVector};

use super::subspace::ConstraintSubspace;
use super::tensor::{poly_hessian, poly_value, poly_value_grad};
use super::{MixtureXi, ModelError};
use crate::rng::NormalStream;

/// Default cap on coupling storage and per-equation scratch space.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;
/// Default slack for evaluation off the unit sphere.
pub const DEFAULT_BALL_SLACK: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Storage {
    /// Couplings materialized at sampling time.
    Dense,
    /// Couplings regenerated from the seed on every access.
    OnDemand,
}

#[derive(Clone, Copy, Debug)]
pub struct MapOptions {
    pub storage: Storage,
    pub memory_budget: u64,
    pub ball_slack: f64,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self { storage: Storage::Dense, memory_budget: DEFAULT_MEMORY_BUDGET, ball_slack: DEFAULT_BALL_SLACK }
    }
}

/// A sampled Gaussian map `F: R^d → R^n`,
/// `F_i(x) = Σ_k √ξ_k ⟨G^{(k)}_i, x^{⊗k}⟩` with i.i.d. standard normal couplings.
#[derive(Clone, Debug)]
pub struct GaussianMap {
    xi: MixtureXi,
    n: usize,
    d: usize,
    seed: u64,
    opts: MapOptions,
    dense: Vec<Option<Vec<f64>>>,
}

/// Bytes needed to store every coupling tensor densely.
pub fn dense_bytes(xi: &MixtureXi, n: usize, d: usize) -> u128 {
    xi.active_degrees().map(|k| 8 * n as u128 * (d as u128).pow(k as u32)).sum()
}

impl GaussianMap {
    pub fn sample(xi: &MixtureXi, n: usize, d: usize, seed: u64) -> Result<Self, ModelError> {
        Self::sample_with(xi, n, d, seed, MapOptions::default())
    }

    pub fn sample_with(xi: &MixtureXi, n: usize, d: usize, seed: u64, opts: MapOptions) -> Result<Self, ModelError> {
        if n < 1 || d < 2 {
            return Err(ModelError::InvalidSize { n, d });
        }
        let mut dense = vec![None; xi.degree() + 1];
        if opts.storage == Storage::Dense {
            let needed = dense_bytes(xi, n, d);
            if needed > opts.memory_budget as u128 {
                return Err(ModelError::MemoryBudget { needed, budget: opts.memory_budget });
            }
            for k in xi.active_degrees() {
                let mut buf = vec![0.0; n * d.pow(k as u32)];
                NormalStream::new(seed, k as u64).fill(0, &mut buf);
                dense[k] = Some(buf);
            }
        }
        Ok(Self { xi: xi.clone(), n, d, seed, opts, dense })
    }

    pub fn xi(&self) -> &MixtureXi {
        &self.xi
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn alpha(&self) -> f64 {
        self.n as f64 / self.d as f64
    }
    pub fn storage(&self) -> Storage {
        self.opts.storage
    }

    fn row_len(&self, k: usize) -> usize {
        self.d.pow(k as u32)
    }

    /// Coupling `G^{(k)}_{i, flat}` with `flat` the row-major index of `(j_1..j_k)`.
    pub fn coupling(&self, k: usize, i: usize, flat: usize) -> f64 {
        let off = i * self.row_len(k) + flat;
        match &self.dense[k] {
            Some(buf) => buf[off],
            None => NormalStream::new(self.seed, k as u64).at(off as u64),
        }
    }

    fn for_each_row(&self, k: usize, mut f: impl FnMut(usize, &[f64])) -> Result<(), ModelError> {
        let len = self.row_len(k);
        match &self.dense[k] {
            Some(buf) => {
                for (i, row) in buf.chunks_exact(len).enumerate() {
                    f(i, row);
                }
            }
            None => {
                let needed = 8 * len as u128;
                if needed > self.opts.memory_budget as u128 {
                    return Err(ModelError::MemoryBudget { needed, budget: self.opts.memory_budget });
                }
                let stream = NormalStream::new(self.seed, k as u64);
                let mut row = vec![0.0; len];
                for i in 0..self.n {
                    stream.fill((i * len) as u64, &mut row);
                    f(i, &row);
                }
            }
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.d {
            return Err(ModelError::DimensionMismatch { expected: self.d, got: x.len() });
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= 1.0 + self.opts.ball_slack) {
            return Err(ModelError::OutOfBall { norm, limit: 1.0 + self.opts.ball_slack });
        }
        Ok(())
    }

    /// `F(x)` and the energy `‖F(x)‖²/2`.
    pub fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, f64), ModelError> {
        self.check_point(x)?;
        let mut f = vec![0.0; self.n];
        for k in self.xi.active_degrees() {
            let w = self.xi.coeff(k).sqrt();
            self.for_each_row(k, |i, row| f[i] += w * poly_value(row, k, self.d, x))?;
        }
        let e = 0.5 * f.iter().map(|v| v * v).sum::<f64>();
        Ok((f, e))
    }

    /// `F(x)` and the Jacobian `DF(x)`.
    pub fn point(&self, x: &[f64]) -> Result<PointEval, ModelError> {
        self.check_point(x)?;
        let (n, d) = (self.n, self.d);
        let mut f = vec![0.0; n];
        let mut jac = DMatrix::<f64>::zeros(n, d);
        for k in self.xi.active_degrees() {
            let w = self.xi.coeff(k).sqrt();
            self.for_each_row(k, |i, row| {
                let (val, grad) = poly_value_grad(row, k, d, x);
                f[i] += w * val;
                if k > 0 {
                    for (a, g) in grad.iter().enumerate() {
                        jac[(i, a)] += w * g;
                    }
                }
            })?;
        }
        Ok(PointEval { x: x.to_vec(), f, jac, hess: None })
    }

    /// `F`, `DF` and the full Hessian `∇²H = DFᵀDF + Σ_i F_i ∇²F_i`.
    pub fn point_with_hessian(&self, x: &[f64]) -> Result<PointEval, ModelError> {
        let mut p = self.point(x)?;
        let d = self.d;
        let mut hess = p.jac.tr_mul(&p.jac);
        for k in self.xi.active_degrees().filter(|&k| k >= 2) {
            let w = self.xi.coeff(k).sqrt();
            let mut weighted = vec![0.0; self.row_len(k)];
            let f = &p.f;
            self.for_each_row(k, |i, row| {
                let c = w * f[i];
                for (a, b) in weighted.iter_mut().zip(row) {
                    *a += c * b;
                }
            })?;
            hess += poly_hessian(&weighted, k, d, x);
        }
        p.hess = Some(hess);
        Ok(p)
    }

    /// Same as [`point_with_hessian`](Self::point_with_hessian) for a point
    /// supported on a few coordinates; only couplings touching the support
    /// are generated, so cost scales as `k² d² |S|^{k-2}` per equation.
    pub fn point_on_support(&self, x: &[f64], support: &[usize]) -> Result<PointEval, ModelError> {
        self.check_point(x)?;
        let (n, d) = (self.n, self.d);
        for (a, v) in x.iter().enumerate() {
            if *v != 0.0 && !support.contains(&a) {
                return Err(ModelError::InvalidSupport(a));
            }
        }
        let xs: Vec<f64> = support.iter().map(|&a| x[a]).collect();
        let mut f = vec![0.0; n];
        let mut jac = DMatrix::<f64>::zeros(n, d);
        for k in self.xi.active_degrees() {
            let w = self.xi.coeff(k).sqrt();
            let strides: Vec<usize> = (0..k).map(|s| d.pow((k - 1 - s) as u32)).collect();
            for i in 0..n {
                let mut val = 0.0;
                for_each_support_index(support, &xs, k, |idx, wt| {
                    let flat: usize = idx.iter().zip(&strides).map(|(j, s)| j * s).sum();
                    val += wt * self.coupling(k, i, flat);
                });
                f[i] += w * val;
                for s in 0..k {
                    for_each_support_index(support, &xs, k - 1, |idx, wt| {
                        let mut base = 0;
                        for (pos, j) in idx.iter().enumerate() {
                            let slot = if pos < s { pos } else { pos + 1 };
                            base += j * strides[slot];
                        }
                        for a in 0..d {
                            jac[(i, a)] += w * wt * self.coupling(k, i, base + a * strides[s]);
                        }
                    });
                }
            }
        }
        let mut hess = jac.tr_mul(&jac);
        for k in self.xi.active_degrees().filter(|&k| k >= 2) {
            let w = self.xi.coeff(k).sqrt();
            let strides: Vec<usize> = (0..k).map(|s| d.pow((k - 1 - s) as u32)).collect();
            for i in 0..n {
                let c = w * f[i];
                for u in 1..k {
                    for s in 0..u {
                        for_each_support_index(support, &xs, k - 2, |idx, wt| {
                            let mut base = 0;
                            let mut pos = 0;
                            for slot in 0..k {
                                if slot != s && slot != u {
                                    base += idx[pos] * strides[slot];
                                    pos += 1;
                                }
                            }
                            let cw = c * wt;
                            for a in 0..d {
                                for b in 0..d {
                                    let g = self.coupling(k, i, base + a * strides[s] + b * strides[u]);
                                    hess[(a, b)] += cw * g;
                                    hess[(b, a)] += cw * g;
                                }
                            }
                        });
                    }
                }
            }
        }
        Ok(PointEval { x: x.to_vec(), f, jac, hess: Some(hess) })
    }

    /// `DF(x)·v` (length n) or, with `transpose`, `DF(x)ᵀ·v` (length d).
    pub fn jacobian_apply(&self, x: &[f64], v: &[f64], transpose: bool) -> Result<Vec<f64>, ModelError> {
        let p = self.point(x)?;
        if transpose {
            p.jac_t_apply(v)
        } else {
            p.jac_apply(v)
        }
    }

    /// `∇H(x) = DF(x)ᵀF(x)`.
    pub fn grad_energy(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.point(x)?.grad())
    }

    /// `P ∇²H(x) P v` for the projector `P` of `subspace` (identity if none).
    pub fn hessian_energy_apply(&self, x: &[f64], v: &[f64], subspace: Option<&ConstraintSubspace>) -> Result<Vec<f64>, ModelError> {
        let p = self.point_with_hessian(x)?;
        p.hess_apply(v, subspace)
    }
}

/// Enumerate multi-indices in `support^r` together with `Π x_{j}`.
fn for_each_support_index(support: &[usize], xs: &[f64], r: usize, mut f: impl FnMut(&[usize], f64)) {
    let s = support.len();
    if s == 0 {
        if r == 0 {
            f(&[], 1.0);
        }
        return;
    }
    let mut pos = vec![0usize; r];
    let mut idx = vec![0usize; r];
    loop {
        let mut wt = 1.0;
        for (slot, &p) in pos.iter().enumerate() {
            idx[slot] = support[p];
            wt *= xs[p];
        }
        f(&idx, wt);
        let mut c = r;
        loop {
            if c == 0 {
                return;
            }
            c -= 1;
            pos[c] += 1;
            if pos[c] < s {
                break;
            }
            pos[c] = 0;
        }
    }
}

/// Local data of the map at a point.
#[derive(Clone, Debug)]
pub struct PointEval {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub jac: DMatrix<f64>,
    pub hess: Option<DMatrix<f64>>,
}

impl PointEval {
    pub fn energy(&self) -> f64 {
        0.5 * self.f.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn grad(&self) -> Vec<f64> {
        let g = self.jac.tr_mul(&DVector::from_column_slice(&self.f));
        g.as_slice().to_vec()
    }

    pub fn jac_apply(&self, v: &[f64]) -> Result<Vec<f64>, ModelError> {
        if v.len() != self.jac.ncols() {
            return Err(ModelError::DimensionMismatch { expected: self.jac.ncols(), got: v.len() });
        }
        Ok((&self.jac * DVector::from_column_slice(v)).as_slice().to_vec())
    }

    pub fn jac_t_apply(&self, u: &[f64]) -> Result<Vec<f64>, ModelError> {
        if u.len() != self.jac.nrows() {
            return Err(ModelError::DimensionMismatch { expected: self.jac.nrows(), got: u.len() });
        }
        Ok(self.jac.tr_mul(&DVector::from_column_slice(u)).as_slice().to_vec())
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        self.hess.as_ref().expect("point evaluated without Hessian")
    }

    /// `P ∇²H P v`; `v` must already lie in the subspace.
    pub fn hess_apply(&self, v: &[f64], subspace: Option<&ConstraintSubspace>) -> Result<Vec<f64>, ModelError> {
        let d = self.jac.ncols();
        if v.len() != d {
            return Err(ModelError::DimensionMismatch { expected: d, got: v.len() });
        }
        if let Some(sub) = subspace {
            sub.check_member(v, 1e-8)?;
        }
        let hv = self.hessian() * DVector::from_column_slice(v);
        let out = hv.as_slice().to_vec();
        Ok(match subspace {
            Some(sub) => sub.project(&out),
            None => out,
        })
    }
}
