use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{generator_rng, GeneratedProblem, Provenance};
use crate::data::{DataMatrix, DenseMatrix};
use crate::error::{invalid, Result};
use crate::math::{dot, sigmoid};
use crate::problem::Problem;
use crate::proximal::{Regularizer, SmoothLoss};

/// Number of leading ones in the true coefficient vector.
pub const SYNTHETIC_SUPPORT: usize = 50;

/// `β_j = 1` for the first `min(p, 50)` coordinates, zero elsewhere.
pub fn synthetic_beta(p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| if j < SYNTHETIC_SUPPORT { 1.0 } else { 0.0 })
        .collect()
}

/// Standard normal `X`, labels `b_i = ±1` with `Pr(b_i = 1) = sigmoid(X_iᵀβ)`
/// and smoothed-hinge losses. The regularizer is the caller's choice
/// (usually an elastic net).
pub fn gen_synthetic(n: usize, p: usize, regularizer: Regularizer, seed: u64) -> Result<GeneratedProblem> {
    if n == 0 || p == 0 {
        return Err(invalid("synthetic data needs n, p >= 1"));
    }
    if regularizer.is_psd() {
        return Err(invalid("synthetic data needs a scalar regularizer"));
    }
    let mut rng = generator_rng(seed, 0);
    let data: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let x = DenseMatrix::new(n, p, data)?;
    let beta = synthetic_beta(p);
    let labels: Vec<f64> = (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            if u < sigmoid(dot(x.row(i), &beta)) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let losses = labels
        .iter()
        .map(|&b| SmoothLoss::smoothed_hinge(b))
        .collect::<Result<Vec<_>>>()?;
    let mut provenance = Provenance::new("synthetic", seed)
        .with("n", n as f64)
        .with("p", p as f64);
    for (k, v) in regularizer_params(&regularizer) {
        provenance = provenance.with(k, v);
    }
    Ok(GeneratedProblem {
        problem: Problem::scalar(DataMatrix::Dense(x), losses, regularizer)?,
        labels,
        provenance,
        closed_form: None,
    })
}

pub(crate) fn regularizer_params(r: &Regularizer) -> Vec<(&'static str, f64)> {
    match *r {
        Regularizer::L2 { lambda } => alloc::vec![("l2", lambda)],
        Regularizer::ElasticNet { l2, l1 } => alloc::vec![("l2", l2), ("l1", l1)],
        Regularizer::PsdFrobenius { lambda, dim } => {
            alloc::vec![("lambda", lambda), ("dim", dim as f64)]
        }
    }
}
