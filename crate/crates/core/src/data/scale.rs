//! The scale constant `Λ_{q,m}`: the largest squared spectral norm over all
//! submatrices formed by `m` dual blocks and `q` primal blocks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{BlockPartition, DataMatrix, DenseMatrix};
use crate::error::{invalid, Error, Result};
use crate::math::{binomial, dot, next_combination, sqrt};
use crate::proximal::eigen::largest_eigenvalue;

/// Default cap on the number of `(I, J)` pairs visited by exact enumeration.
pub const ENUMERATION_CAP: u128 = 100_000;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 500;

/// Gram matrices up to this size go through Jacobi instead of power iteration.
const JACOBI_MAX_DIM: usize = 16;

/// How the solver picks `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LambdaPolicy {
    /// Closed form when one exists, exact enumeration under the cap, else the
    /// heuristic.
    #[default]
    Auto,
    Exact,
    Heuristic,
    /// A cheap value that is never below the exact constant.
    UpperBound,
    Fixed(f64),
}

impl LambdaPolicy {
    pub fn resolve(&self, a: &DataMatrix, partition: &BlockPartition, q: usize, m: usize) -> Result<f64> {
        check_sizes(partition, q, m)?;
        match *self {
            LambdaPolicy::Auto => {
                if let Some(v) = scale_constant_closed_form(a, partition, q, m)? {
                    return Ok(v);
                }
                if subset_pair_count(partition, q, m) <= ENUMERATION_CAP {
                    scale_constant_exact(a, partition, q, m)
                } else {
                    scale_constant_heuristic_blocks(a, partition, q, m)
                }
            }
            LambdaPolicy::Exact => match scale_constant_closed_form(a, partition, q, m)? {
                Some(v) => Ok(v),
                None => scale_constant_exact(a, partition, q, m),
            },
            LambdaPolicy::Heuristic => scale_constant_heuristic_blocks(a, partition, q, m),
            LambdaPolicy::UpperBound => scale_constant_upper_bound(a, partition, q, m),
            LambdaPolicy::Fixed(v) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("fixed scale constant must be positive, got {v}")));
                }
                Ok(v)
            }
        }
    }
}

fn check_sizes(partition: &BlockPartition, q: usize, m: usize) -> Result<()> {
    if q == 0 || q > partition.p() {
        return Err(invalid(format!("q must be in 1..={}, got {q}", partition.p())));
    }
    if m == 0 || m > partition.n() {
        return Err(invalid(format!("m must be in 1..={}, got {m}", partition.n())));
    }
    Ok(())
}

/// `C(n, m) · C(p, q)` in blocks, saturating.
pub fn subset_pair_count(partition: &BlockPartition, q: usize, m: usize) -> u128 {
    binomial(partition.n(), m).saturating_mul(binomial(partition.p(), q))
}

/// Exact `Λ_{q,m}` by enumeration with the default cap.
pub fn scale_constant_exact(a: &DataMatrix, partition: &BlockPartition, q: usize, m: usize) -> Result<f64> {
    scale_constant_exact_capped(a, partition, q, m, ENUMERATION_CAP)
}

pub fn scale_constant_exact_capped(
    a: &DataMatrix,
    partition: &BlockPartition,
    q: usize,
    m: usize,
    cap: u128,
) -> Result<f64> {
    partition.check_matrix(a)?;
    check_sizes(partition, q, m)?;
    let pairs = subset_pair_count(partition, q, m);
    if pairs > cap {
        return Err(Error::Capacity { pairs, cap });
    }
    let dense = a.to_dense()?;
    let mut best = 0.0f64;
    let mut rows_sel: Vec<usize> = (0..m).collect();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    loop {
        rows.clear();
        for &i in &rows_sel {
            rows.extend(partition.dual_range(i));
        }
        let mut cols_sel: Vec<usize> = (0..q).collect();
        loop {
            cols.clear();
            for &j in &cols_sel {
                cols.extend(partition.primal_range(j));
            }
            let sub = DenseMatrix::from_fn(rows.len(), cols.len(), |r, c| dense.get(rows[r], cols[c]));
            best = best.max(spectral_norm_sq(&sub)?);
            if !next_combination(&mut cols_sel, partition.p()) {
                break;
            }
        }
        if !next_combination(&mut rows_sel, partition.n()) {
            break;
        }
    }
    Ok(best)
}

/// `(m q / p) · Λ_{p,1}` for scalar coordinates, `Λ_{p,1}` being the largest
/// squared row norm.
pub fn scale_constant_heuristic(a: &DataMatrix, q: usize, m: usize) -> f64 {
    let p = a.cols();
    if p == 0 {
        return 0.0;
    }
    let lambda_p1 = (0..a.rows()).map(|i| a.row_norm_sq(i)).fold(0.0, f64::max);
    (m as f64) * (q as f64) / (p as f64) * lambda_p1
}

/// Block form of the heuristic: `(m q / p) · max_i ‖A_i‖₂²` over dual blocks.
pub fn scale_constant_heuristic_blocks(
    a: &DataMatrix,
    partition: &BlockPartition,
    q: usize,
    m: usize,
) -> Result<f64> {
    partition.check_matrix(a)?;
    let lambda_p1 = if partition.dual_is_scalar() {
        (0..a.rows()).map(|i| a.row_norm_sq(i)).fold(0.0, f64::max)
    } else {
        let mut best = 0.0f64;
        for i in 0..partition.n() {
            let r = partition.dual_range(i);
            let block = DenseMatrix::from_fn(r.len(), a.cols(), |k, c| a.entry(r.start + k, c));
            best = best.max(spectral_norm_sq(&block)?);
        }
        best
    };
    Ok((m as f64) * (q as f64) / (partition.p() as f64) * lambda_p1)
}

/// Squared Frobenius norms of every `(dual block, primal block)` pair.
fn block_frobenius(a: &DataMatrix, partition: &BlockPartition) -> Vec<f64> {
    let (n, p) = (partition.n(), partition.p());
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for r in partition.dual_range(i) {
            for j in 0..p {
                for c in partition.primal_range(j) {
                    let v = a.entry(r, c);
                    out[i * p + j] += v * v;
                }
            }
        }
    }
    out
}

fn top_k_sum(values: &mut [f64], k: usize) -> f64 {
    values.sort_unstable_by(|x, y| y.total_cmp(x));
    values[..k].iter().sum()
}

/// Closed forms for the cases where no enumeration is needed:
/// a single scalar row (`m = 1`), a single scalar column (`q = 1`), or the
/// whole matrix.
pub fn scale_constant_closed_form(
    a: &DataMatrix,
    partition: &BlockPartition,
    q: usize,
    m: usize,
) -> Result<Option<f64>> {
    partition.check_matrix(a)?;
    check_sizes(partition, q, m)?;
    let (n, p) = (partition.n(), partition.p());
    if q == p && m == n {
        return Ok(Some(matrix_norm_sq(a)?));
    }
    if m == 1 && partition.dual_is_scalar() {
        let norms = block_frobenius(a, partition);
        let best = (0..n)
            .map(|i| top_k_sum(&mut norms[i * p..(i + 1) * p].to_vec(), q))
            .fold(0.0, f64::max);
        return Ok(Some(best));
    }
    if q == 1 && partition.primal_is_scalar() {
        let norms = block_frobenius(a, partition);
        let best = (0..p)
            .map(|j| {
                let mut col: Vec<f64> = (0..n).map(|i| norms[i * p + j]).collect();
                top_k_sum(&mut col, m)
            })
            .fold(0.0, f64::max);
        return Ok(Some(best));
    }
    Ok(None)
}

/// `min(‖A‖_F², m · max_i Σ_top-q ‖A_i^j‖_F², q · max_j Σ_top-m ‖A_i^j‖_F²)`,
/// each term a valid upper bound on `Λ_{q,m}`.
pub fn scale_constant_upper_bound(
    a: &DataMatrix,
    partition: &BlockPartition,
    q: usize,
    m: usize,
) -> Result<f64> {
    partition.check_matrix(a)?;
    check_sizes(partition, q, m)?;
    let (n, p) = (partition.n(), partition.p());
    let norms = block_frobenius(a, partition);
    let frob: f64 = norms.iter().sum();
    let by_row = (0..n)
        .map(|i| top_k_sum(&mut norms[i * p..(i + 1) * p].to_vec(), q))
        .fold(0.0, f64::max);
    let by_col = (0..p)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| norms[i * p + j]).collect();
            top_k_sum(&mut col, m)
        })
        .fold(0.0, f64::max);
    Ok(frob.min(m as f64 * by_row).min(q as f64 * by_col))
}

/// Squared spectral norm of a small dense matrix.
pub fn spectral_norm_sq(s: &DenseMatrix) -> Result<f64> {
    let (r, c) = (s.rows(), s.cols());
    if r == 0 || c == 0 {
        return Ok(0.0);
    }
    let k = r.min(c);
    let gram = if r <= c {
        DenseMatrix::from_fn(r, r, |i, j| dot(s.row(i), s.row(j)))
    } else {
        DenseMatrix::from_fn(c, c, |i, j| (0..r).map(|t| s.get(t, i) * s.get(t, j)).sum())
    };
    if k == 1 {
        return Ok(gram.get(0, 0));
    }
    if k <= JACOBI_MAX_DIM {
        return Ok(largest_eigenvalue(&gram)?.max(0.0));
    }
    let diag: Vec<f64> = (0..k).map(|i| gram.get(i, i)).collect();
    power_iteration(k, &diag, |v, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(gram.row(i), v);
        }
    })
}

/// `‖A‖₂²` by power iteration on the smaller Gram operator, without
/// materializing `A`.
pub fn matrix_norm_sq(a: &DataMatrix) -> Result<f64> {
    let (n, p) = (a.rows(), a.cols());
    if n == 0 || p == 0 {
        return Ok(0.0);
    }
    if p <= n {
        let diag: Vec<f64> = {
            let mut d = vec![0.0; p];
            for (j, dj) in d.iter_mut().enumerate() {
                let mut e = vec![0.0; n];
                a.axpy_col(j, 1.0, &mut e);
                *dj = dot(&e, &e);
            }
            d
        };
        let mut tmp = vec![0.0; n];
        power_iteration(p, &diag, |v, out| {
            a.apply_into(v, &mut tmp);
            a.apply_transpose_into(&tmp, out);
        })
    } else {
        let diag: Vec<f64> = (0..n).map(|i| a.row_norm_sq(i)).collect();
        let mut tmp = vec![0.0; p];
        power_iteration(n, &diag, |v, out| {
            a.apply_transpose_into(v, &mut tmp);
            a.apply_into(&tmp, out);
        })
    }
}

/// Largest eigenvalue of a PSD operator of size `k`. Starts from the
/// normalized all-ones vector; if that lies in the null space, restarts from
/// the coordinate with the largest diagonal entry.
fn power_iteration(k: usize, diag: &[f64], mut apply: impl FnMut(&[f64], &mut [f64])) -> Result<f64> {
    let start_ones = vec![1.0 / sqrt(k as f64); k];
    let mut v = start_ones;
    let mut w = vec![0.0; k];
    let mut restarted = false;
    let mut est = 0.0f64;
    let mut iters = 0;
    loop {
        apply(&v, &mut w);
        let norm = sqrt(dot(&w, &w));
        if !norm.is_finite() {
            return Err(Error::Numerical {
                context: "power iteration",
                detail: format!("non-finite iterate after {iters} steps"),
            });
        }
        let scale = diag.iter().copied().fold(0.0, f64::max);
        if norm <= 1e-300 || (iters == 0 && norm <= 1e-14 * scale) {
            if restarted || scale == 0.0 {
                return Ok(est);
            }
            restarted = true;
            let best = (0..k).max_by(|&i, &j| diag[i].total_cmp(&diag[j])).unwrap();
            v.iter_mut().for_each(|x| *x = 0.0);
            v[best] = 1.0;
            continue;
        }
        iters += 1;
        let prev = est;
        est = est.max(norm);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if iters > 1 && (norm - prev).abs() <= POWER_TOLERANCE * norm {
            return Ok(est);
        }
        if iters >= POWER_MAX_ITERS {
            log::debug!("power iteration stopped at the iteration cap with estimate {est:e}");
            return Ok(est);
        }
    }
}
