mod common;

use common::dense_rows;
use dspdc_core::instances::{gen_lower_bound, gen_synthetic};
use dspdc_core::Regularizer;
use dspdc_testkit as oracle;

#[test]
fn lower_bound_scale_constant_respects_bound() {
    for n in 2..=6 {
        for q in [1.5, 4.0, 9.0, 100.0] {
            let inst = gen_lower_bound(n, q).unwrap();
            let g = inst.generated().unwrap();
            let exact = oracle::brute_force_scale_constant(&dense_rows(g.problem.matrix()), 1, 1);
            assert!(exact <= inst.lambda11_bound * (1.0 + 1e-12), "n={n} Q={q}: {exact} > {}", inst.lambda11_bound);
        }
    }
}

#[test]
fn lower_bound_optimum_solves_linear_system() {
    // (4/(Q−1) I + SᵀS) y* = e₁, solved densely
    let (n, q) = (10, 16.0);
    let inst = gen_lower_bound(n, q).unwrap();
    let s = dense_rows(&dspdc_core::DataMatrix::Dense(inst.s.clone()));
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (0..n).map(|k| s[k][i] * s[k][j]).sum::<f64>();
        }
        m[i * n + i] += 4.0 / (q - 1.0);
    }
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let y = oracle::solve(n, &m, &e1);
    for (a, b) in y.iter().zip(&inst.y_star) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn generators_are_pure() {
    let reg = Regularizer::elastic_net(0.01, 0.001).unwrap();
    assert_eq!(gen_synthetic(8, 4, reg, 1).unwrap(), gen_synthetic(8, 4, reg, 1).unwrap());
    assert_eq!(gen_lower_bound(5, 3.0).unwrap(), gen_lower_bound(5, 3.0).unwrap());
}
