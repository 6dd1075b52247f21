use serde::{Deserialize, Serialize};

use super::ModelError;

/// Covariance mixture `ξ(t) = Σ ξ_k t^k` with non-negative coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixtureXi {
    coeffs: Vec<f64>,
}

impl MixtureXi {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, ModelError> {
        if coeffs.is_empty() {
            return Err(ModelError::InvalidMixture("empty coefficient list".into()));
        }
        for (k, c) in coeffs.iter().enumerate() {
            if !c.is_finite() || *c < 0.0 {
                return Err(ModelError::InvalidMixture(format!("coefficient {k} = {c} is not a finite non-negative number")));
            }
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.iter().sum::<f64>() <= 0.0 {
            return Err(ModelError::InvalidMixture("ξ(1) must be positive".into()));
        }
        Ok(Self { coeffs })
    }

    /// `ξ0 + t^p`.
    pub fn pure(xi0: f64, p: usize) -> Result<Self, ModelError> {
        let mut c = vec![0.0; p + 1];
        c[0] = xi0;
        c[p] += 1.0;
        Self::new(c)
    }

    /// Parse a comma separated coefficient list such as `1,0,0,1`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let coeffs = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| ModelError::InvalidMixture(format!("bad coefficient {s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `order`-th derivative at `t`.
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for k in (order..self.coeffs.len()).rev() {
            let mut f = 1.0;
            for j in 0..order {
                f *= (k - j) as f64;
            }
            acc = acc * t + self.coeffs[k] * f;
        }
        acc
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t, 0)
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.eval(t, 1)
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.eval(t, 2)
    }

    pub fn xi0(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn total(&self) -> f64 {
        self.value(1.0)
    }

    /// True when ξ'' vanishes identically.
    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    /// `Some((ξ0, p))` when the mixture is `ξ0 + t^p` with `p ≥ 2`.
    pub fn as_pure(&self) -> Option<(f64, usize)> {
        let p = self.degree();
        if p < 2 || self.coeffs[p] != 1.0 {
            return None;
        }
        if self.coeffs[1..p].iter().all(|&c| c == 0.0) {
            Some((self.coeffs[0], p))
        } else {
            None
        }
    }

    /// `ξ_{>0}(t) = ξ(t) − ξ(0)`.
    pub fn without_constant(&self) -> Result<Self, ModelError> {
        let mut c = self.coeffs.clone();
        c[0] = 0.0;
        Self::new(c)
    }

    /// Indices `k` with `ξ_k > 0`.
    pub fn active_degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| **c > 0.0).map(|(k, _)| k)
    }
}

impl TryFrom<Vec<f64>> for MixtureXi {
    type Error = ModelError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<MixtureXi> for Vec<f64> {
    fn from(x: MixtureXi) -> Self {
        x.coeffs
    }
}

impl std::fmt::Display for MixtureXi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| format!("{c}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_values() {
        let xi = MixtureXi::new(vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(xi.eval(1.0, 0), 2.0);
        assert_eq!(xi.eval(1.0, 1), 3.0);
        assert_eq!(xi.eval(0.5, 2), 3.0);
        assert_eq!(xi.eval(0.5, 4), 0.0);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(MixtureXi::new(vec![]).is_err());
        assert!(MixtureXi::new(vec![1.0, -0.1]).is_err());
        assert!(MixtureXi::new(vec![0.0, 0.0]).is_err());
        assert!(MixtureXi::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn pure_detection() {
        assert_eq!(MixtureXi::pure(2.0, 4).unwrap().as_pure(), Some((2.0, 4)));
        assert_eq!(MixtureXi::parse("1,1,0,1").unwrap().as_pure(), None);
        assert_eq!(MixtureXi::parse("1,0,0,1,0,0").unwrap().degree(), 3);
    }

    proptest! {
        #[test]
        fn derivative_matches_power_sum(c in proptest::collection::vec(0.0f64..2.0, 1..6), t in -1.5f64..1.5, order in 0usize..5) {
            prop_assume!(c.iter().sum::<f64>() > 0.0);
            let xi = MixtureXi::new(c.clone()).unwrap();
            let mut direct = 0.0;
            for (k, ck) in c.iter().enumerate() {
                if k >= order {
                    let mut f = 1.0;
                    for j in 0..order { f *= (k - j) as f64; }
                    direct += ck * f * t.powi((k - order) as i32);
                }
            }
            prop_assert!((xi.eval(t, order) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }
}
