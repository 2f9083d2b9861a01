use dspdc_core::instances::gen_synthetic;
use dspdc_core::metrics::{certify_reference, duality_gap, primal_objective};
use dspdc_core::solvers::{dspdc_run, sdca_run};
use dspdc_core::{
    Checkpoints, DataMatrix, DenseMatrix, Problem, Regularizer, RunOptions, RunSettings, SmoothLoss,
    SolverParams,
};

#[test]
fn sdca_solves_single_instance_in_one_step() {
    // min_x (a x − b)² + λ x²/2 has x* = 2ab / (2a² + λ)
    let (a, b, lam) = (1.7, 0.4, 0.3);
    let problem = Problem::scalar(
        DataMatrix::Dense(DenseMatrix::new(1, 1, vec![a]).unwrap()),
        vec![SmoothLoss::square(b).unwrap()],
        Regularizer::l2(lam).unwrap(),
    )
    .unwrap();
    let settings = RunSettings {
        max_iters: 1,
        ..RunSettings::default()
    };
    let out = sdca_run(&problem, &settings, &RunOptions::default()).unwrap();
    let x_star = 2.0 * a * b / (2.0 * a * a + lam);
    let y_star = 2.0 * (a * x_star - b);
    assert!((out.state.x()[0] - x_star).abs() <= 1e-12);
    assert!((out.state.y()[0] - y_star).abs() <= 1e-12);
}

#[test]
fn sdca_and_dspdc_reach_the_same_optimum() {
    let g = gen_synthetic(60, 20, Regularizer::elastic_net(0.05, 0.001).unwrap(), 9).unwrap();
    let reference = certify_reference(&g.problem, None, 500_000).unwrap();
    let p_star = primal_objective(&g.problem, &reference.x_star).unwrap();

    let settings = RunSettings {
        max_iters: 60 * 400,
        gap_tolerance: 1e-9,
        seed: 4,
        ..RunSettings::default()
    };
    let opts = RunOptions::default().with_checkpoints(Checkpoints::linear(600, 60 * 400).unwrap());
    let sdca = sdca_run(&g.problem, &settings, &opts).unwrap();
    let gap = duality_gap(&g.problem, sdca.state.x(), sdca.state.y()).unwrap().unwrap();
    assert!(gap <= 1e-6, "sdca gap {gap}");

    let params = SolverParams::for_problem(&g.problem, 5, 10, &settings)
        .unwrap()
        .with_budget(100_000, 1e-9);
    let dspdc = dspdc_run(&g.problem, &params, &opts).unwrap();
    let p_sdca = primal_objective(&g.problem, sdca.state.x()).unwrap();
    let p_dspdc = primal_objective(&g.problem, dspdc.state.x()).unwrap();
    assert!((p_sdca - p_dspdc).abs() <= 1e-6);
    assert!((p_sdca - p_star).abs() <= 1e-6);
}

#[test]
fn sdca_rejects_psd_blocks() {
    let g = dspdc_core::instances::gen_matrix_risk(4, 1, 2, 1.0, 0).unwrap();
    assert!(sdca_run(&g.problem, &RunSettings::default(), &RunOptions::default()).is_err());
}

#[test]
fn sdca_dual_never_decreases_for_square_loss() {
    // exact coordinate maximization: every step can only raise the dual
    let rows = 30;
    let cols = 8;
    let a = DenseMatrix::from_fn(rows, cols, |i, j| ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0);
    let losses = (0..rows)
        .map(|i| SmoothLoss::square(((i * 3) % 5) as f64 - 2.0).unwrap())
        .collect();
    let problem = Problem::scalar(DataMatrix::Dense(a), losses, Regularizer::l2(0.1).unwrap()).unwrap();
    let iters = 300;
    let mut mean = vec![0.0; iters as usize + 1];
    for seed in 0..20 {
        let settings = RunSettings {
            max_iters: iters,
            seed,
            ..RunSettings::default()
        };
        let opts = RunOptions::default().with_checkpoints(Checkpoints::linear(1, iters).unwrap());
        let out = sdca_run(&problem, &settings, &opts).unwrap();
        for (m, rec) in mean.iter_mut().zip(&out.trace) {
            *m += rec.dual.unwrap() / 20.0;
        }
    }
    for w in mean.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
    }
    assert!(mean[iters as usize] > mean[0]);
}
