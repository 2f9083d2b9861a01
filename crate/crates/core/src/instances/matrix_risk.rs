use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{generator_rng, GeneratedProblem, Provenance};
use crate::data::{BlockPartition, DataMatrix, DenseMatrix};
use crate::error::{invalid, Result};
use crate::problem::Problem;
use crate::proximal::{Regularizer, SmoothLoss};

/// Multiple-matrix risk minimization with `p` symmetric `d × d` unknowns.
///
/// Row `i` of the data matrix is `vec(D_i^1), …, vec(D_i^p)` (row-major
/// `d × d` blocks of standard normals). With the ground truth `X̄_j = I` the
/// label is `+1` exactly when `Σ_j trace(D_i^j) > 0`. Primal blocks have size
/// `d²`, dual blocks size one.
pub fn gen_matrix_risk(n: usize, p: usize, d: usize, lambda: f64, seed: u64) -> Result<GeneratedProblem> {
    if n == 0 || p == 0 || d == 0 {
        return Err(invalid("matrix risk needs n, p, d >= 1"));
    }
    let regularizer = Regularizer::psd_frobenius(lambda, d)?;
    let width = p * d * d;
    let mut rng = generator_rng(seed, 0);
    let a = DenseMatrix::from_fn(n, width, |_, _| rng.sample(StandardNormal));
    let labels: Vec<f64> = (0..n)
        .map(|i| {
            let row = a.row(i);
            let trace: f64 = (0..p)
                .map(|j| (0..d).map(|k| row[j * d * d + k * d + k]).sum::<f64>())
                .sum();
            if trace > 0.0 {
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
    let partition = BlockPartition::new(vec![d * d; p], vec![1; n])?;
    let provenance = Provenance::new("matrix_risk", seed)
        .with("n", n as f64)
        .with("p", p as f64)
        .with("d", d as f64)
        .with("lambda", lambda);
    Ok(GeneratedProblem {
        problem: Problem::new(DataMatrix::Dense(a), losses, regularizer, partition)?,
        labels,
        provenance,
        closed_form: None,
    })
}
