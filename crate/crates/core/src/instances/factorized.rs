use rand::Rng;
use rand_distr::StandardNormal;

use super::{generator_rng, gen_synthetic, GeneratedProblem};
use crate::data::{DataMatrix, DenseMatrix, FactorizedMatrix};
use crate::error::{invalid, Result};
use crate::math::sqrt;
use crate::problem::Problem;
use crate::proximal::Regularizer;

// Gaussian sketches use their own ChaCha stream so that a factorized problem
// shares its `X` with the dense one generated from the same seed.
const SKETCH_STREAM: u64 = 1;

fn gaussian_sketch(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = generator_rng(seed, SKETCH_STREAM);
    let scale = 1.0 / sqrt(rows as f64);
    DenseMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Feature reduction `A = X Gᵀ G` with `G` a `d × p` matrix of `N(0, 1/d)`
/// entries, stored as `U = X Gᵀ`, `V = G`.
pub fn feature_reduction(x: &DenseMatrix, d: usize, seed: u64) -> Result<FactorizedMatrix> {
    if d == 0 || d >= x.cols() {
        return Err(invalid("feature reduction needs 1 <= d < p"));
    }
    let g = gaussian_sketch(d, x.cols(), seed);
    let u = x.matmul(&g.transpose())?;
    FactorizedMatrix::new(u, g)
}

/// Instance reduction `A = Gᵀ G X` with `G` a `d × n` matrix of `N(0, 1/d)`
/// entries, stored as `U = Gᵀ`, `V = G X`.
pub fn instance_reduction(x: &DenseMatrix, d: usize, seed: u64) -> Result<FactorizedMatrix> {
    if d == 0 || d >= x.rows() {
        return Err(invalid("instance reduction needs 1 <= d < n"));
    }
    let g = gaussian_sketch(d, x.rows(), seed);
    let v = g.matmul(x)?;
    FactorizedMatrix::new(g.transpose(), v)
}

fn rebuild(
    base: &GeneratedProblem,
    a: FactorizedMatrix,
    name: &str,
    d: usize,
    seed: u64,
) -> Result<GeneratedProblem> {
    let p = &base.problem;
    let problem = Problem::new(
        DataMatrix::Factorized(a),
        p.losses().to_vec(),
        p.regularizer().clone(),
        p.partition().clone(),
    )?;
    let mut provenance = base.provenance.clone();
    provenance.generator = alloc::format!("{}+{}", provenance.generator, name);
    provenance.params.insert("d".into(), d as f64);
    provenance.params.insert("sketch_seed".into(), seed as f64);
    Ok(GeneratedProblem {
        problem,
        labels: base.labels.clone(),
        provenance,
        closed_form: None,
    })
}

/// Replaces the data matrix of `base` with its feature reduction.
pub fn gen_factorized(base: &GeneratedProblem, d: usize, seed: u64) -> Result<GeneratedProblem> {
    let x = base.problem.matrix().to_dense()?;
    rebuild(base, feature_reduction(&x, d, seed)?, "feature_reduction", d, seed)
}

/// Replaces the data matrix of `base` with its instance reduction.
pub fn gen_instance_reduction(base: &GeneratedProblem, d: usize, seed: u64) -> Result<GeneratedProblem> {
    let x = base.problem.matrix().to_dense()?;
    rebuild(base, instance_reduction(&x, d, seed)?, "instance_reduction", d, seed)
}

/// Synthetic data followed by feature reduction, both from `seed`.
pub fn gen_synthetic_factorized(
    n: usize,
    p: usize,
    d: usize,
    regularizer: Regularizer,
    seed: u64,
) -> Result<GeneratedProblem> {
    let base = gen_synthetic(n, p, regularizer, seed)?;
    gen_factorized(&base, d, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = generator_rng(seed, 7);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identity_input_gives_gram_of_sketch() {
        let p = 6;
        let f = feature_reduction(&DenseMatrix::identity(p), p - 1, 3).unwrap();
        let g = f.v();
        let gram = g.transpose().matmul(g).unwrap();
        let a = f.materialize();
        for (x, y) in a.data().iter().zip(gram.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_must_be_below_width() {
        let x = random_dense(4, 5, 1);
        assert!(feature_reduction(&x, 5, 0).is_err());
        assert!(feature_reduction(&x, 0, 0).is_err());
        assert!(instance_reduction(&x, 4, 0).is_err());
    }

    #[test]
    fn sketch_columns_have_unit_norm_on_average() {
        // ‖G e_j‖² ~ χ²_d / d: mean 1, variance 2/d
        let (d, p) = (8, 200);
        let g = gaussian_sketch(d, p, 5);
        let mean: f64 = (0..p)
            .map(|j| (0..d).map(|i| g.get(i, j).powi(2)).sum::<f64>())
            .sum::<f64>()
            / p as f64;
        let sd = sqrt(2.0 / d as f64 / p as f64);
        assert!((mean - 1.0).abs() <= 3.0 * sd, "{mean}");
    }

    #[test]
    fn factorized_matvec_matches_materialized() {
        let x = random_dense(7, 9, 2);
        for f in [
            feature_reduction(&x, 4, 9).unwrap(),
            instance_reduction(&x, 3, 9).unwrap(),
        ] {
            let dense = DataMatrix::Dense(f.materialize());
            let fact = DataMatrix::Factorized(f);
            let v: Vec<f64> = (0..9).map(|j| j as f64 - 4.0).collect();
            let a = fact.apply(&v).unwrap();
            let b = dense.apply(&v).unwrap();
            for (s, t) in a.iter().zip(&b) {
                assert!((s - t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn instance_reduction_materializes_gram_times_x() {
        let x = random_dense(5, 3, 4);
        let f = instance_reduction(&x, 2, 1).unwrap();
        let g = f.u().transpose();
        let want = g.transpose().matmul(&g).unwrap().matmul(&x).unwrap();
        for (a, b) in f.materialize().data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_factorized_keeps_labels() {
        let reg = Regularizer::l2(0.1).unwrap();
        let base = gen_synthetic(10, 8, reg.clone(), 3).unwrap();
        let f = gen_synthetic_factorized(10, 8, 3, reg, 3).unwrap();
        assert_eq!(base.labels, f.labels);
        assert_eq!(f.problem.matrix().storage_name(), "factorized");
    }
}
