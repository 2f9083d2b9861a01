mod common;

use common::*;
use dspdc_core::data::{scale_constant_exact, IndexSample};
use dspdc_core::instances::{gen_lower_bound, gen_matrix_risk, gen_synthetic, gen_synthetic_factorized};
use dspdc_core::solvers::{
    bdspdc_run, dspdc_factorized_run, dspdc_run, dspdc_run_maintaining, dspdc_step, spdc_run,
    DspdcSolver, MaintainedKind,
};
use dspdc_core::{
    BlockPartition, Checkpoints, DataMatrix, DenseMatrix, IterateState, LambdaPolicy, Mode, Problem,
    Regularizer, RunOptions, RunSettings, SmoothLoss, SolverParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_problem(n: usize, p: usize, reg: Regularizer, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DenseMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let losses = (0..n)
        .map(|i| {
            let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
            match i % 3 {
                0 => SmoothLoss::square(rng.random_range(-2.0..2.0)),
                1 => SmoothLoss::smoothed_hinge(b),
                _ => SmoothLoss::logistic(b),
            }
            .unwrap()
        })
        .collect();
    Problem::scalar(DataMatrix::Dense(a), losses, reg).unwrap()
}

fn exact_settings(mode: Mode) -> RunSettings {
    RunSettings {
        mode,
        lambda: LambdaPolicy::Exact,
        ..RunSettings::default()
    }
}

fn draw(rng: &mut ChaCha8Rng, universe: usize, k: usize) -> IndexSample {
    let mut all: Vec<usize> = (0..universe).collect();
    for t in 0..k {
        let r = rng.random_range(t..universe);
        all.swap(t, r);
    }
    all.truncate(k);
    IndexSample::new(all, universe).unwrap()
}

#[test]
fn ten_steps_match_plain_transliteration() {
    let regs = [
        Regularizer::elastic_net(0.3, 0.05).unwrap(),
        Regularizer::l2(0.7).unwrap(),
    ];
    for (r, reg) in regs.into_iter().enumerate() {
        let problem = random_problem(3, 3, reg, 10 + r as u64);
        let rows = dense_rows(problem.matrix());
        for (q, m) in [(1, 1), (2, 1), (1, 2), (3, 3), (2, 3)] {
            let params = SolverParams::for_problem(&problem, q, m, &exact_settings(Mode::Distance)).unwrap();
            for kind in [MaintainedKind::DualProduct, MaintainedKind::PrimalProduct] {
                let mut rng = ChaCha8Rng::seed_from_u64(99);
                let mut state = IterateState::new(&problem, kind, None, None).unwrap();
                let mut plain = PlainState::zeros(3, 3);
                for t in 0..10 {
                    let i = draw(&mut rng, 3, m);
                    let j = draw(&mut rng, 3, q);
                    state = dspdc_step(&state, &problem, &params, &i, &j).unwrap();
                    plain = plain_step(
                        &problem,
                        &rows,
                        params.theta,
                        params.tau,
                        params.sigma,
                        i.indices(),
                        j.indices(),
                        &plain,
                    );
                    for (name, got, want) in [
                        ("x", state.x(), &plain.x),
                        ("y", state.y(), &plain.y),
                        ("x_bar", state.x_bar(), &plain.x_bar),
                        ("y_bar", state.y_bar(), &plain.y_bar),
                    ] {
                        let d = max_diff(got, want);
                        assert!(d <= 1e-12, "{name} off by {d} at step {t}, (q,m)=({q},{m}), {kind:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn block_steps_match_plain_transliteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = DenseMatrix::from_fn(6, 5, |_, _| rng.sample(StandardNormal));
    let losses = (0..6).map(|i| SmoothLoss::smoothed_hinge(if i % 2 == 0 { 1.0 } else { -1.0 }).unwrap()).collect();
    let part = BlockPartition::new(vec![2, 1, 2], vec![2, 2, 1, 1]).unwrap();
    let problem = Problem::new(DataMatrix::Dense(a), losses, Regularizer::elastic_net(0.5, 0.02).unwrap(), part).unwrap();
    let rows = dense_rows(problem.matrix());
    let params = SolverParams::for_problem(&problem, 2, 2, &exact_settings(Mode::Distance)).unwrap();
    for kind in [MaintainedKind::DualProduct, MaintainedKind::PrimalProduct] {
        let mut state = IterateState::new(&problem, kind, None, None).unwrap();
        let mut plain = PlainState::zeros(5, 6);
        for _ in 0..20 {
            let i = draw(&mut rng, 4, 2);
            let j = draw(&mut rng, 3, 2);
            state = dspdc_step(&state, &problem, &params, &i, &j).unwrap();
            plain = plain_step(&problem, &rows, params.theta, params.tau, params.sigma, i.indices(), j.indices(), &plain);
            assert!(max_diff(state.x(), &plain.x) <= 1e-12);
            assert!(max_diff(state.y(), &plain.y) <= 1e-12);
        }
    }
}

#[test]
fn unit_blocks_reproduce_scalar_run() {
    let g = gen_synthetic(12, 7, Regularizer::elastic_net(0.1, 0.01).unwrap(), 4).unwrap();
    let scalar = g.problem.clone();
    let blocks = Problem::new(
        scalar.matrix().clone(),
        scalar.losses().to_vec(),
        scalar.regularizer().clone(),
        BlockPartition::new(vec![1; 7], vec![1; 12]).unwrap(),
    )
    .unwrap();
    let params = SolverParams::for_problem(&scalar, 3, 4, &exact_settings(Mode::Distance))
        .unwrap()
        .with_budget(300, 0.0)
        .with_seed(8);
    let a = dspdc_run(&scalar, &params, &RunOptions::default()).unwrap();
    let b = bdspdc_run(&blocks, &params, &RunOptions::default()).unwrap();
    assert_eq!(a.state.x(), b.state.x());
    assert_eq!(a.state.y(), b.state.y());
}

#[test]
fn maintained_sides_agree_over_long_runs() {
    let g = gen_synthetic(30, 20, Regularizer::elastic_net(0.05, 0.001).unwrap(), 2).unwrap();
    let params = SolverParams::for_problem(&g.problem, 4, 6, &RunSettings::default())
        .unwrap()
        .with_budget(2000, 0.0)
        .with_seed(1);
    let opts = RunOptions {
        drift_check_every: 100,
        ..RunOptions::default()
    };
    let d = dspdc_run_maintaining(&g.problem, &params, &opts, MaintainedKind::DualProduct).unwrap();
    let p = dspdc_run_maintaining(&g.problem, &params, &opts, MaintainedKind::PrimalProduct).unwrap();
    assert!(max_diff(d.state.x(), p.state.x()) <= 1e-10);
    assert!(max_diff(d.state.y(), p.state.y()) <= 1e-10);
    assert_eq!(d.stats.drift_checks, 20);
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let g = gen_synthetic(15, 10, Regularizer::l2(0.1).unwrap(), 6).unwrap();
    let params = SolverParams::for_problem(&g.problem, 2, 3, &RunSettings::default())
        .unwrap()
        .with_budget(400, 0.0)
        .with_seed(17);
    let a = dspdc_run(&g.problem, &params, &RunOptions::default()).unwrap();
    let b = dspdc_run(&g.problem, &params, &RunOptions::default()).unwrap();
    assert_eq!(a.state, b.state);
    let c = dspdc_run(&g.problem, &params.clone().with_seed(18), &RunOptions::default()).unwrap();
    assert_ne!(a.state.x(), c.state.x());
}

#[test]
fn spdc_is_dspdc_with_all_primal_coordinates() {
    let g = gen_synthetic(25, 8, Regularizer::elastic_net(0.05, 0.001).unwrap(), 5).unwrap();
    let settings = RunSettings {
        max_iters: 1000,
        seed: 42,
        ..RunSettings::default()
    };
    let opts = RunOptions::default().with_checkpoints(Checkpoints::linear(1, 1000).unwrap());
    let spdc = spdc_run(&g.problem, 1, &settings, &opts).unwrap();
    let params = SolverParams::for_problem(&g.problem, 8, 1, &settings).unwrap();
    let dspdc = dspdc_run(&g.problem, &params, &opts).unwrap();
    assert_eq!(spdc.trace.len(), 1001);
    for (a, b) in spdc.trace.iter().zip(&dspdc.trace) {
        assert_eq!(a.primal.to_bits(), b.primal.to_bits());
        assert_eq!(a.dual.map(f64::to_bits), b.dual.map(f64::to_bits));
    }
    assert_eq!(spdc.state, dspdc.state);
}

#[test]
fn stepping_solver_matches_run() {
    let g = gen_synthetic(10, 6, Regularizer::l2(0.2).unwrap(), 1).unwrap();
    let params = SolverParams::for_problem(&g.problem, 2, 2, &RunSettings::default())
        .unwrap()
        .with_budget(50, 0.0)
        .with_seed(3);
    let mut solver = DspdcSolver::new(&g.problem, &params, None, None, None).unwrap();
    for _ in 0..50 {
        solver.step().unwrap();
    }
    let run = dspdc_run(&g.problem, &params, &RunOptions::default()).unwrap();
    assert_eq!(solver.state(), &run.state);
    assert_eq!(solver.stats().iterations, 50);
}

fn factorized_pair(d: usize) -> (Problem, Problem) {
    let g = gen_synthetic_factorized(40, 30, d, Regularizer::elastic_net(0.05, 0.001).unwrap(), 12).unwrap();
    let dense = g
        .problem
        .with_matrix(DataMatrix::Dense(g.problem.matrix().as_factorized().unwrap().materialize()))
        .unwrap();
    (g.problem, dense)
}

#[test]
fn factorized_run_matches_materialized_matrix() {
    let (fact, dense) = factorized_pair(5);
    let settings = RunSettings {
        lambda: LambdaPolicy::Heuristic,
        ..RunSettings::default()
    };
    let params = SolverParams::for_problem(&dense, 3, 4, &settings)
        .unwrap()
        .with_budget(500, 0.0)
        .with_seed(21);
    let a = dspdc_factorized_run(&fact, &params, &RunOptions::default()).unwrap();
    let b = dspdc_run(&dense, &params, &RunOptions::default()).unwrap();
    assert!(max_diff(a.state.x(), b.state.x()) <= 1e-8);
    assert!(max_diff(a.state.y(), b.state.y()) <= 1e-8);
    assert!(dspdc_factorized_run(&dense, &params, &RunOptions::default()).is_err());
}

#[test]
fn factorized_work_scales_with_rank() {
    let mut flops = Vec::new();
    for d in [5, 10] {
        let (fact, _) = factorized_pair(d);
        let params = SolverParams::for_problem(&fact, 3, 4, &RunSettings::default())
            .unwrap()
            .with_budget(200, 0.0);
        let out = dspdc_factorized_run(&fact, &params, &RunOptions::default()).unwrap();
        flops.push(out.stats.flops as f64 / 200.0);
    }
    let ratio = flops[1] / flops[0];
    assert!((1.8..=2.2).contains(&ratio), "{ratio}");
}

#[test]
fn converges_to_lower_bound_optimum() {
    let inst = gen_lower_bound(8, 9.0).unwrap();
    let g = inst.generated().unwrap();
    let reference = g.closed_form.as_ref().unwrap();
    let params = SolverParams::for_problem(&g.problem, 1, 1, &exact_settings(Mode::Distance))
        .unwrap()
        .with_budget(20_000, 0.0)
        .with_seed(5);
    let out = dspdc_run(&g.problem, &params, &RunOptions::default().with_reference(reference)).unwrap();
    let d = dist_sq(out.state.x(), &inst.x_star) + dist_sq(out.state.y(), &inst.y_star);
    assert!(d <= 1e-10, "{d}");
}

#[test]
fn matrix_risk_takes_one_eigendecomposition_per_iteration() {
    let g = gen_matrix_risk(20, 4, 5, 1.0, 3).unwrap();
    let params = SolverParams::for_problem(&g.problem, 1, 1, &RunSettings::default())
        .unwrap()
        .with_budget(300, 0.0);
    let out = bdspdc_run(&g.problem, &params, &RunOptions::default()).unwrap();
    assert_eq!(out.stats.eigendecompositions, 300);
    assert_eq!(out.stats.iterations, 300);
}

#[test]
fn exact_scale_constant_is_used_by_default_on_small_problems() {
    let problem = random_problem(4, 3, Regularizer::l2(1.0).unwrap(), 2);
    let exact = scale_constant_exact(problem.matrix(), problem.partition(), 2, 2).unwrap();
    let params = SolverParams::for_problem(&problem, 2, 2, &RunSettings::default()).unwrap();
    assert!((params.scale_constant - exact).abs() <= 1e-10 * exact);
}
