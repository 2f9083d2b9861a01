use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{GeneratedProblem, Provenance};
use crate::data::{DataMatrix, DenseMatrix};
use crate::error::{invalid, Result};
use crate::math::sqrt;
use crate::metrics::{ReferenceSolution, ReferenceSource};
use crate::problem::Problem;
use crate::proximal::{Regularizer, SmoothLoss};

/// The bidiagonal "bad" instance whose optimum decays geometrically.
///
/// With `S` upper bidiagonal and `M = SᵀS` the `(2, −1)` tridiagonal matrix
/// whose last diagonal entry is `ξ`, the saddle problem is
///
/// ```text
/// min_x max_y  (Q−1)/8 ‖x‖² − (Q−1)/4 yᵀSᵀx − ‖y‖²/2 + (Q−1)/4 e₁ᵀy
/// ```
///
/// It is expressed with square losses `(z − b)²/(2n)`, `b₁ = −n(Q−1)/4`,
/// `A = −n(Q−1)/4 Sᵀ` and an L2 regularizer of modulus `(Q−1)/4`. The optimum
/// is `y*_j = r^j`, `x* = S y*`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LowerBoundInstance {
    pub n: usize,
    pub q: f64,
    pub s: DenseMatrix,
    pub xi: f64,
    pub r: f64,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
    /// Upper bound `n²(Q−1)²/8` on the scale constant for single coordinates.
    pub lambda11_bound: f64,
}

pub fn gen_lower_bound(n: usize, q: f64) -> Result<LowerBoundInstance> {
    if n < 2 {
        return Err(invalid("lower-bound instance needs n >= 2"));
    }
    if !(q > 1.0) || !q.is_finite() {
        return Err(invalid("lower-bound instance needs a finite Q > 1"));
    }
    let sq = sqrt(q);
    let xi = (sq + 3.0) / (sq + 1.0);
    let r = (sq - 1.0) / (sq + 1.0);
    let mut s = DenseMatrix::zeros(n, n);
    for j in 1..n {
        let jf = j as f64;
        s.set(j - 1, j - 1, sqrt((jf + 1.0) / jf));
        s.set(j - 1, j, -sqrt(jf / (jf + 1.0)));
    }
    s.set(n - 1, n - 1, sqrt(xi - (n as f64 - 1.0) / n as f64));

    let mut y_star = Vec::with_capacity(n);
    let mut pow = 1.0;
    for _ in 0..n {
        pow *= r;
        y_star.push(pow);
    }
    let x_star: Vec<f64> = (0..n)
        .map(|j| {
            let next = if j + 1 < n { s.get(j, j + 1) * y_star[j + 1] } else { 0.0 };
            s.get(j, j) * y_star[j] + next
        })
        .collect();
    Ok(LowerBoundInstance {
        n,
        q,
        s,
        xi,
        r,
        x_star,
        y_star,
        lambda: (q - 1.0) / 4.0,
        gamma: n as f64,
        lambda11_bound: (n * n) as f64 * (q - 1.0) * (q - 1.0) / 8.0,
    })
}

impl LowerBoundInstance {
    /// The data matrix `A = −n(Q−1)/4 Sᵀ`.
    pub fn matrix(&self) -> DenseMatrix {
        let c = -(self.n as f64) * (self.q - 1.0) / 4.0;
        DenseMatrix::from_fn(self.n, self.n, |i, j| c * self.s.get(j, i))
    }

    pub fn labels(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        b[0] = -(self.n as f64) * (self.q - 1.0) / 4.0;
        b
    }

    /// The dual objective after eliminating `x = S y`:
    /// `−‖y‖²/2 − (Q−1)/4 (yᵀMy/2 − e₁ᵀy)`.
    pub fn reduced_dual(&self, y: &[f64]) -> f64 {
        let c = (self.q - 1.0) / 4.0;
        let sy: Vec<f64> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.s.get(i, j) * y[j]).sum())
            .collect();
        let quad: f64 = sy.iter().map(|v| v * v).sum();
        let norm: f64 = y.iter().map(|v| v * v).sum();
        -norm / 2.0 - c * (quad / 2.0 - y[0])
    }

    pub fn generated(&self) -> Result<GeneratedProblem> {
        let labels = self.labels();
        let losses = labels
            .iter()
            .map(|&b| SmoothLoss::square_scaled(b, self.gamma))
            .collect::<Result<Vec<_>>>()?;
        let problem = Problem::scalar(
            DataMatrix::Dense(self.matrix()),
            losses,
            Regularizer::l2(self.lambda)?,
        )?;
        Ok(GeneratedProblem {
            problem,
            labels,
            provenance: Provenance::new("lower_bound", 0)
                .with("n", self.n as f64)
                .with("q", self.q),
            closed_form: Some(ReferenceSolution {
                x_star: self.x_star.clone(),
                y_star: self.y_star.clone(),
                gap_at_certification: 0.0,
                source: ReferenceSource::ClosedForm,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_q9() {
        let inst = gen_lower_bound(4, 9.0).unwrap();
        assert_eq!(inst.r, 0.5);
        assert_eq!(inst.xi, 1.5);
        assert_eq!(inst.y_star, vec![0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(inst.lambda, 2.0);
        assert_eq!(inst.gamma, 4.0);
    }

    #[test]
    fn gram_is_tridiagonal() {
        let inst = gen_lower_bound(6, 4.0).unwrap();
        let m = inst.s.transpose().matmul(&inst.s).unwrap();
        for i in 0..6usize {
            for j in 0..6 {
                let want = if i == j {
                    if i == 5 { inst.xi } else { 2.0 }
                } else if i.abs_diff(j) == 1 {
                    -1.0
                } else {
                    0.0
                };
                assert!((m.get(i, j) - want).abs() < 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn sandwich_bound() {
        for (n, q) in [(4, 9.0), (8, 4.0), (16, 9.0), (30, 100.0)] {
            let inst = gen_lower_bound(n, q).unwrap();
            for j in 0..n {
                let rj = inst.r.powi(j as i32 + 1);
                assert!(rj * (1.0 - inst.r) <= inst.x_star[j] + 1e-15);
                assert!(inst.x_star[j] <= sqrt(2.0) * rj + 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gen_lower_bound(4, 1.0).is_err());
        assert!(gen_lower_bound(1, 9.0).is_err());
    }
}
