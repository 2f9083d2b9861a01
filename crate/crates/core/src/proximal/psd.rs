use alloc::format;

use super::eigen::{symmetric_eigen, SymmetricEigen};
use crate::data::DenseMatrix;
use crate::error::{invalid, Result};

/// Largest `|X_ij − X_ji|` accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Smallest eigenvalue still counted as inside the PSD cone.
pub const PSD_TOLERANCE: f64 = 1e-10;

pub fn sym(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
}

/// Euclidean projection of a symmetric matrix onto the PSD cone, with the
/// eigendecomposition that produced it.
pub fn project_psd(c: &DenseMatrix) -> Result<(DenseMatrix, SymmetricEigen)> {
    let e = symmetric_eigen(c)?;
    let out = e.reconstruct_with(|l| l.max(0.0));
    // reconstruction rounding can leave a tiny asymmetry
    Ok((sym(&out), e))
}

/// Minimizer over PSD `X` of
/// `⟨G, X⟩/n + (λ/2)‖X‖_F² + ‖X − X̄‖_F² / (2τ)`.
pub fn psd_prox(g: &DenseMatrix, x_bar: &DenseMatrix, tau: f64, lambda: f64, n: f64) -> Result<DenseMatrix> {
    let d = x_bar.rows();
    if x_bar.cols() != d || g.rows() != d || g.cols() != d {
        return Err(invalid("psd prox needs square matrices of equal size"));
    }
    if !(tau > 0.0) || !(lambda > 0.0) || !(n > 0.0) {
        return Err(invalid(format!(
            "psd prox needs positive tau, lambda and n (got {tau}, {lambda}, {n})"
        )));
    }
    let asym = x_bar.max_asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(invalid(format!("prox center is not symmetric (asymmetry {asym:e})")));
    }
    let scale = 1.0 / (lambda + 1.0 / tau);
    let c = DenseMatrix::from_fn(d, d, |i, j| {
        let gs = 0.5 * (g.get(i, j) + g.get(j, i));
        let xs = 0.5 * (x_bar.get(i, j) + x_bar.get(j, i));
        (xs / tau - gs / n) * scale
    });
    Ok(project_psd(&c)?.0)
}

/// Smallest eigenvalue, or `None` when `x` is not symmetric.
pub fn min_eigenvalue(x: &DenseMatrix) -> Result<Option<f64>> {
    if x.max_asymmetry() > SYMMETRY_TOLERANCE {
        return Ok(None);
    }
    let e = symmetric_eigen(x)?;
    Ok(Some(e.values.iter().copied().fold(f64::INFINITY, f64::min)))
}
