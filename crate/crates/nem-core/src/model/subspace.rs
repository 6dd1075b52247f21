use nalgebra::DMatrix;

use super::ModelError;
use crate::linalg::{axpy, dot, norm};

const DEPENDENCE_TOL: f64 = 1e-8;

/// Orthogonal complement of `{anchor} ∪ extras`: the tangent space at the
/// anchor intersected with the hyperplanes orthogonal to each extra vector.
#[derive(Clone, Debug)]
pub struct ConstraintSubspace {
    anchor: Vec<f64>,
    extras: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
}

impl ConstraintSubspace {
    /// Fails on a zero anchor or a linearly dependent constraint set; the
    /// offending index counts the anchor as 0 and extras from 1.
    pub fn new(anchor: &[f64], extras: &[Vec<f64>]) -> Result<Self, ModelError> {
        Self::build(anchor, extras, false)
    }

    /// Like [`new`](Self::new) but silently drops extras already in the span
    /// of earlier constraints (e.g. the first phase-two step, where the
    /// anchor equals the extra vector).
    pub fn spanning(anchor: &[f64], extras: &[Vec<f64>]) -> Result<Self, ModelError> {
        Self::build(anchor, extras, true)
    }

    pub fn tangent(anchor: &[f64]) -> Result<Self, ModelError> {
        Self::build(anchor, &[], false)
    }

    fn build(anchor: &[f64], extras: &[Vec<f64>], lenient: bool) -> Result<Self, ModelError> {
        let d = anchor.len();
        let an = norm(anchor);
        if an == 0.0 || !an.is_finite() {
            return Err(ModelError::ZeroAnchor);
        }
        let mut basis = vec![anchor.iter().map(|v| v / an).collect::<Vec<_>>()];
        for (j, e) in extras.iter().enumerate() {
            if e.len() != d {
                return Err(ModelError::DimensionMismatch { expected: d, got: e.len() });
            }
            let en = norm(e);
            let mut r = e.clone();
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &r);
                    axpy(-c, q, &mut r);
                }
            }
            let rn = norm(&r);
            if en == 0.0 || rn <= DEPENDENCE_TOL * en {
                if lenient {
                    continue;
                }
                return Err(ModelError::DegenerateConstraint { index: j + 1 });
            }
            r.iter_mut().for_each(|v| *v /= rn);
            basis.push(r);
        }
        Ok(Self { anchor: anchor.to_vec(), extras: extras.to_vec(), basis })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn extras(&self) -> &[Vec<f64>] {
        &self.extras
    }

    /// Number of independent constraints.
    pub fn codim(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, &r);
                axpy(-c, q, &mut r);
            }
        }
        r
    }

    pub fn project_in_place(&self, v: &mut [f64]) {
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
    }

    /// Error when `v` has a constraint component above `tol·max(1, ‖v‖)`.
    pub fn check_member(&self, v: &[f64], tol: f64) -> Result<(), ModelError> {
        let scale = norm(v).max(1.0);
        let off: f64 = self.basis.iter().map(|q| dot(q, v).powi(2)).sum::<f64>().sqrt();
        if off > tol * scale {
            return Err(ModelError::NotInSubspace { residual: off });
        }
        Ok(())
    }

    /// Orthonormal basis of the subspace as the columns of a `d × (d − codim)` matrix.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut cols: Vec<Vec<f64>> = self.basis.clone();
        let c = cols.len();
        for j in 0..d {
            if cols.len() == d {
                break;
            }
            let mut r = vec![0.0; d];
            r[j] = 1.0;
            for _ in 0..2 {
                for q in &cols {
                    let coef = dot(q, &r);
                    axpy(-coef, q, &mut r);
                }
            }
            let rn = norm(&r);
            if rn > 1e-6 {
                r.iter_mut().for_each(|v| *v /= rn);
                cols.push(r);
            }
        }
        DMatrix::from_fn(d, d - c, |i, j| cols[c + j][i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit_random;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn parallel_vector_projects_to_zero() {
        let x = vec![0.3, -0.4, 0.5];
        let s = ConstraintSubspace::tangent(&x).unwrap();
        let v: Vec<f64> = x.iter().map(|a| 2.0 * a).collect();
        assert!(norm(&s.project(&v)) < 1e-15);
    }

    #[test]
    fn orthogonal_vector_is_unchanged() {
        let x = vec![1.0, 0.0, 0.0, 0.0];
        let e = vec![vec![0.0, 1.0, 0.0, 0.0]];
        let s = ConstraintSubspace::new(&x, &e).unwrap();
        let v = vec![0.0, 0.0, 0.7, -0.2];
        assert_eq!(s.project(&v), v);
    }

    #[test]
    fn degenerate_constraints_are_reported() {
        let x = vec![1.0, 1.0, 0.0];
        let e = vec![vec![0.0, 0.0, 1.0], vec![2.0, 2.0, 0.0]];
        assert!(matches!(ConstraintSubspace::new(&x, &e), Err(ModelError::DegenerateConstraint { index: 2 })));
        assert_eq!(ConstraintSubspace::spanning(&x, &e).unwrap().codim(), 2);
        assert!(matches!(ConstraintSubspace::tangent(&[0.0, 0.0]), Err(ModelError::ZeroAnchor)));
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let mut rng = stream_rng(2, &[]);
        let x = unit_random(&mut rng, 7);
        let e = vec![unit_random(&mut rng, 7)];
        let s = ConstraintSubspace::new(&x, &e).unwrap();
        let u = s.complement_basis();
        assert_eq!(u.ncols(), 5);
        let g = u.tr_mul(&u);
        assert!((g - DMatrix::identity(5, 5)).abs().max() < 1e-12);
        for j in 0..5 {
            assert!(dot(u.column(j).as_slice(), &x).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_orthogonal(seed in 0u64..500, d in 3usize..12) {
            let mut rng = stream_rng(seed, &[]);
            let x = unit_random(&mut rng, d);
            let e = vec![unit_random(&mut rng, d)];
            let s = ConstraintSubspace::new(&x, &e).unwrap();
            let v = unit_random(&mut rng, d);
            let p = s.project(&v);
            let pp = s.project(&p);
            for (a, b) in p.iter().zip(&pp) { prop_assert!((a - b).abs() < 1e-13); }
            prop_assert!(dot(&p, &x).abs() <= 1e-12 * norm(&v));
            prop_assert!(dot(&p, &e[0]).abs() <= 1e-12 * norm(&v));
            // symmetry ⟨Pu, v⟩ = ⟨u, Pv⟩
            let u = unit_random(&mut rng, d);
            prop_assert!((dot(&s.project(&u), &v) - dot(&u, &p)).abs() < 1e-13);
        }
    }
}
