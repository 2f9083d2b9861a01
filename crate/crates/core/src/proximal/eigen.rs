//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use alloc::format;
use alloc::vec::Vec;

use crate::data::DenseMatrix;
use crate::error::{Error, Result};
use crate::math::sqrt;

/// Stop once the off-diagonal Frobenius norm is below this fraction of the
/// full Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues with eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    /// `V diag(f(values)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d = self.values.len();
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        DenseMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|k| v.get(i, k) * w[k] * v.get(j, k)).sum()
        })
    }
}

fn off_diagonal_sq(a: &DenseMatrix) -> f64 {
    let d = a.rows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a.get(i, j) * a.get(i, j);
            }
        }
    }
    s
}

/// Eigendecomposition of the symmetric part of `a`. Only the upper triangle is
/// trusted; callers validate symmetry.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    let d = a.rows();
    if a.cols() != d {
        return Err(Error::InvalidArgument(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            d,
            a.cols()
        )));
    }
    let mut m = DenseMatrix::from_fn(d, d, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut v = DenseMatrix::identity(d);
    let total = m.frobenius_sq();
    if !total.is_finite() {
        return Err(Error::Numerical {
            context: "jacobi eigensolver",
            detail: format!("non-finite input"),
        });
    }
    let target = (JACOBI_TOLERANCE * JACOBI_TOLERANCE) * total;

    let mut sweeps = 0;
    while off_diagonal_sq(&m) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical {
                context: "jacobi eigensolver",
                detail: format!(
                    "off-diagonal mass {:e} after {MAX_SWEEPS} sweeps",
                    sqrt(off_diagonal_sq(&m) / total)
                ),
            });
        }
        sweeps += 1;
        for p in 0..d {
            for q in p + 1..d {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m.get(p, p), m.get(q, q));
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..d {
                    let (mkp, mkq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..d {
                    let (mpk, mqk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..d {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let values = (0..d).map(|i| m.get(i, i)).collect();
    Ok(SymmetricEigen { values, vectors: v })
}

/// Largest eigenvalue of a symmetric matrix.
pub fn largest_eigenvalue(a: &DenseMatrix) -> Result<f64> {
    let e = symmetric_eigen(a)?;
    Ok(e.values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}
