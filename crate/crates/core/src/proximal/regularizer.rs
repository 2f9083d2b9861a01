use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::psd::{min_eigenvalue, project_psd, PSD_TOLERANCE};
use crate::data::DenseMatrix;
use crate::error::{invalid, Error, Result};
use crate::math::KahanSum;

/// Separable, strongly convex regularizer `g(x) = Σ_j g_j(x_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Regularizer {
    /// `(λ/2) α²`.
    L2 { lambda: f64 },
    /// `(λ₂/2) α² + λ₁ |α|`.
    ElasticNet { l2: f64, l1: f64 },
    /// `(λ/2)‖X‖_F²` restricted to `d × d` PSD blocks, stored row-major.
    PsdFrobenius { lambda: f64, dim: usize },
}

impl Regularizer {
    pub fn l2(lambda: f64) -> Result<Self> {
        let r = Regularizer::L2 { lambda };
        r.validate()?;
        Ok(r)
    }

    pub fn elastic_net(l2: f64, l1: f64) -> Result<Self> {
        let r = Regularizer::ElasticNet { l2, l1 };
        r.validate()?;
        Ok(r)
    }

    pub fn psd_frobenius(lambda: f64, dim: usize) -> Result<Self> {
        let r = Regularizer::PsdFrobenius { lambda, dim };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            Regularizer::L2 { lambda } if ok(lambda) => Ok(()),
            Regularizer::ElasticNet { l2, l1 } if ok(l2) && l1 >= 0.0 && l1.is_finite() => Ok(()),
            Regularizer::PsdFrobenius { lambda, dim } if ok(lambda) && dim > 0 => Ok(()),
            r => Err(invalid(format!("invalid regularizer parameters: {r:?}"))),
        }
    }

    /// Strong-convexity modulus `λ`.
    pub fn modulus(&self) -> f64 {
        match *self {
            Regularizer::L2 { lambda } | Regularizer::PsdFrobenius { lambda, .. } => lambda,
            Regularizer::ElasticNet { l2, .. } => l2,
        }
    }

    /// True for the coordinate-separable kinds with a scalar conjugate.
    pub fn has_conjugate(&self) -> bool {
        !self.is_psd()
    }

    pub fn is_psd(&self) -> bool {
        matches!(self, Regularizer::PsdFrobenius { .. })
    }

    /// Size of one primal block this regularizer acts on.
    pub fn block_size(&self) -> usize {
        match *self {
            Regularizer::PsdFrobenius { dim, .. } => dim * dim,
            _ => 1,
        }
    }

    /// `g_j(α)` for a scalar coordinate.
    pub fn value_scalar(&self, a: f64) -> Result<f64> {
        match *self {
            Regularizer::L2 { lambda } => Ok(0.5 * lambda * a * a),
            Regularizer::ElasticNet { l2, l1 } => Ok(0.5 * l2 * a * a + l1 * a.abs()),
            Regularizer::PsdFrobenius { .. } => Err(Error::Unsupported("scalar value of a PSD block regularizer")),
        }
    }

    /// `g_j(X)` for one block; `+∞` for a matrix block outside the PSD cone.
    pub fn value_block(&self, x: &[f64]) -> Result<f64> {
        match *self {
            Regularizer::PsdFrobenius { lambda, dim } => {
                let m = DenseMatrix::new(dim, dim, x.to_vec())?;
                match min_eigenvalue(&m)? {
                    Some(l) if l >= -PSD_TOLERANCE => Ok(0.5 * lambda * m.frobenius_sq()),
                    _ => Ok(f64::INFINITY),
                }
            }
            _ => {
                let mut s = KahanSum::default();
                for &a in x {
                    s.add(self.value_scalar(a)?);
                }
                Ok(s.value())
            }
        }
    }

    /// Scalar primal prox: minimizer of `v α / n + g_j(α) + (α − x̄)² / (2τ)`.
    pub fn primal_prox(&self, v: f64, x_bar: f64, tau: f64, n: f64) -> Result<f64> {
        let c = x_bar / tau - v / n;
        match *self {
            Regularizer::L2 { lambda } => Ok(c / (lambda + 1.0 / tau)),
            Regularizer::ElasticNet { l2, l1 } => Ok(soft_threshold(c, l1) / (l2 + 1.0 / tau)),
            Regularizer::PsdFrobenius { .. } => Err(Error::Unsupported("scalar prox of a PSD block regularizer")),
        }
    }

    /// `g_j*(u)` for a scalar coordinate.
    pub fn conjugate(&self, u: f64) -> Result<f64> {
        match *self {
            Regularizer::L2 { lambda } => Ok(u * u / (2.0 * lambda)),
            Regularizer::ElasticNet { l2, l1 } => {
                let s = (u.abs() - l1).max(0.0);
                Ok(s * s / (2.0 * l2))
            }
            Regularizer::PsdFrobenius { .. } => Err(Error::Unsupported("scalar conjugate of a PSD block regularizer")),
        }
    }

    /// `∇g_j*(u)`, the maximizer in the definition of the conjugate.
    pub fn conjugate_grad(&self, u: f64) -> Result<f64> {
        match *self {
            Regularizer::L2 { lambda } => Ok(u / lambda),
            Regularizer::ElasticNet { l2, l1 } => Ok(soft_threshold(u, l1) / l2),
            Regularizer::PsdFrobenius { .. } => Err(Error::Unsupported("scalar conjugate of a PSD block regularizer")),
        }
    }

    /// `g_j*(U)` for one block. For PSD blocks this is
    /// `‖Π₊(sym U)‖_F² / (2λ)`.
    pub fn conjugate_block(&self, u: &[f64]) -> Result<f64> {
        match *self {
            Regularizer::PsdFrobenius { lambda, dim } => {
                let m = DenseMatrix::new(dim, dim, u.to_vec())?;
                let (proj, _) = project_psd(&super::psd::sym(&m))?;
                Ok(proj.frobenius_sq() / (2.0 * lambda))
            }
            _ => {
                let mut s = KahanSum::default();
                for &v in u {
                    s.add(self.conjugate(v)?);
                }
                Ok(s.value())
            }
        }
    }
}

#[inline]
pub(crate) fn soft_threshold(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dspdc_testkit as oracle;
    use proptest::prelude::*;

    fn prox_oracle(r: &Regularizer, v: f64, xb: f64, tau: f64, n: f64) -> f64 {
        let f = |a: f64| v * a / n + r.value_scalar(a).unwrap() + (a - xb) * (a - xb) / (2.0 * tau);
        let c = (xb / tau - v / n).abs();
        let bound = 2.0 * tau * c + xb.abs() + 1.0;
        oracle::argmin_convex(f, -bound, bound)
    }

    #[test]
    fn prox_examples() {
        let l2 = Regularizer::l2(1.0).unwrap();
        assert_eq!(l2.primal_prox(0.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(l2.primal_prox(1.0, 2.0, 1.0, 1.0).unwrap(), 0.5);
        assert!((prox_oracle(&l2, 1.0, 2.0, 1.0, 1.0) - 0.5).abs() < 1e-8);

        let en = Regularizer::elastic_net(1.0, 0.5).unwrap();
        assert_eq!(en.primal_prox(0.0, 0.3, 1.0, 1.0).unwrap(), 0.0);
        assert!(prox_oracle(&en, 0.0, 0.3, 1.0, 1.0).abs() < 1e-8);
    }

    #[test]
    fn conjugate_examples() {
        let l2 = Regularizer::l2(2.0).unwrap();
        assert_eq!(l2.conjugate(0.0).unwrap(), 0.0);
        assert_eq!(l2.conjugate(2.0).unwrap(), 1.0);
        let num = oracle::numeric_conjugate(|x| x * x, 2.0, -10.0, 10.0);
        assert!((num - 1.0).abs() < 1e-8);
        let en = Regularizer::elastic_net(1.0, 1.0).unwrap();
        assert_eq!(en.conjugate(0.5).unwrap(), 0.0);
        let num = oracle::numeric_conjugate(|x| 0.5 * x * x + x.abs(), 0.5, -10.0, 10.0);
        assert!(num.abs() < 1e-8);
        let psd = Regularizer::psd_frobenius(1.0, 2).unwrap();
        assert!(matches!(psd.conjugate(1.0), Err(Error::Unsupported(_))));
        assert!(!psd.has_conjugate());
    }

    #[test]
    fn psd_block_conjugate_matches_projection() {
        let psd = Regularizer::psd_frobenius(2.0, 2).unwrap();
        // eigenvalues 3 and -1; only 3 survives
        let u = [1.0, 2.0, 2.0, 1.0];
        assert!((psd.conjugate_block(&u).unwrap() - 9.0 / 4.0).abs() < 1e-12);
        assert_eq!(psd.value_block(&[1.0, 0.0, 0.0, -1.0]).unwrap(), f64::INFINITY);
        assert_eq!(psd.value_block(&[1.0, 0.0, 0.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Regularizer::l2(0.0).is_err());
        assert!(Regularizer::elastic_net(1.0, -1.0).is_err());
        assert!(Regularizer::psd_frobenius(1.0, 0).is_err());
    }

    fn reg_strategy() -> impl Strategy<Value = Regularizer> {
        prop_oneof![
            (0.01f64..5.0).prop_map(|l| Regularizer::l2(l).unwrap()),
            (0.01f64..5.0, 0.0f64..2.0).prop_map(|(a, b)| Regularizer::elastic_net(a, b).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn prox_matches_golden_section(
            r in reg_strategy(),
            v in -5.0f64..5.0,
            xb in -3.0f64..3.0,
            tau in 0.01f64..10.0,
            n in 1.0f64..50.0,
        ) {
            let got = r.primal_prox(v, xb, tau, n).unwrap();
            let want = prox_oracle(&r, v, xb, tau, n);
            prop_assert!((got - want).abs() <= 1e-8, "{:?}: {} vs {}", r, got, want);
        }

        #[test]
        fn strong_convexity(r in reg_strategy(), a in -4.0f64..4.0, b in -4.0f64..4.0) {
            // subgradient inequality with the subgradient at b
            let lam = r.modulus();
            let sub = match r {
                Regularizer::L2 { lambda } => lambda * b,
                Regularizer::ElasticNet { l2, l1 } => l2 * b + l1 * b.signum(),
                _ => unreachable!(),
            };
            let lhs = r.value_scalar(a).unwrap();
            let rhs = r.value_scalar(b).unwrap() + sub * (a - b) + 0.5 * lam * (a - b) * (a - b);
            prop_assert!(lhs >= rhs - 1e-10);
        }

        #[test]
        fn conjugate_matches_numeric_sup(r in reg_strategy(), u in -4.0f64..4.0) {
            let lam = r.modulus();
            let bound = 2.0 * (u.abs() / lam + 1.0);
            let num = oracle::numeric_conjugate(|x| r.value_scalar(x).unwrap(), u, -bound, bound);
            let got = r.conjugate(u).unwrap();
            prop_assert!((num - got).abs() <= 1e-8 * (1.0 + got.abs()));
            let x = r.conjugate_grad(u).unwrap();
            prop_assert!((u * x - r.value_scalar(x).unwrap() - got).abs() <= 1e-10 * (1.0 + got.abs()));
        }
    }
}
