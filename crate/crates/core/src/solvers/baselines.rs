use alloc::vec;
use alloc::vec::Vec;

use super::engine::{bdspdc_run, record, DRIFT_TOLERANCE};
use super::state::{IterateState, MaintainedKind};
use super::trace::{RunOptions, RunOutput, SolverStats};
use super::{RunSettings, SolverParams};
use crate::data::{solver_rng, DataMatrix, SubsetSampler};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::solvers::Maintained;

/// SPDC: DSPDC that updates every primal coordinate (`q = p`) and `m` dual
/// coordinates per iteration.
pub fn spdc_run(problem: &Problem, m: usize, settings: &RunSettings, opts: &RunOptions<'_>) -> Result<RunOutput> {
    let params = SolverParams::for_problem(problem, problem.p(), m, settings)?;
    bdspdc_run(problem, &params, opts)
}

/// Stochastic dual coordinate ascent. Each iteration maximizes a quadratic
/// lower bound of the dual objective in one sampled coordinate, which is exact
/// for square loss with an `ℓ2` regularizer; the primal iterate is kept at
/// `x = ∇g*(−Aᵀy/n)`.
pub fn sdca_run(problem: &Problem, settings: &RunSettings, opts: &RunOptions<'_>) -> Result<RunOutput> {
    let reg = *problem.regularizer();
    if reg.is_psd() {
        return Err(Error::Unsupported("SDCA needs a coordinate-wise regularizer conjugate"));
    }
    let a = problem.matrix();
    let losses = problem.losses();
    let n = problem.n() as f64;
    let lam = reg.modulus();
    let clock = opts.clock;
    let start = clock.now();

    let mut state = IterateState::new(problem, MaintainedKind::DualProduct, None, opts.y0)?;
    let primal_from = |aty: &[f64], c: usize| reg.conjugate_grad(-aty[c] / n);
    if let Maintained::DualProduct { aty } = &state.maintained {
        let x: Vec<f64> = (0..aty.len()).map(|c| primal_from(aty, c)).collect::<Result<_>>()?;
        state.x_prev.clone_from(&x);
        state.x_bar.clone_from(&x);
        state.x = x;
    }
    let norms: Vec<f64> = (0..a.rows()).map(|k| a.row_norm_sq(k)).collect();
    let mut stats = SolverStats::default();
    let mut rng = solver_rng(settings.seed);
    let mut sampler = SubsetSampler::new(problem.dual_dim(), 1)?;
    let mut trace = vec![record(problem, &state, opts.reference, clock.now() - start)?];
    let checkpoints = opts.checkpoints.iterations();
    let mut next_cp = 0;

    for t in 1..=settings.max_iters {
        let k = sampler.draw(&mut rng)[0];
        let old = state.y[k];
        let new = if norms[k] == 0.0 {
            losses[k].grad(0.0)
        } else {
            let z = a.row_dot_unchecked(k, &state.x);
            stats.flops += a.row_cost(k);
            losses[k].dual_prox(z, old, lam * n * n / norms[k], n)?
        };
        let delta = new - old;
        if delta != 0.0 {
            state.y[k] = new;
            state.y_bar[k] = new;
            let Maintained::DualProduct { aty } = &mut state.maintained else {
                unreachable!("SDCA maintains A^T y")
            };
            a.axpy_row(k, delta, aty);
            stats.flops += a.row_cost(k);
            refresh_primal(a, k, aty, &mut state.x, &primal_from)?;
        }
        state.iteration += 1;
        stats.iterations += 1;
        stats.dual_coordinate_updates += 1;
        if opts.drift_check_every > 0 && t % opts.drift_check_every == 0 {
            stats.drift_checks += 1;
            state.check_drift(a, DRIFT_TOLERANCE)?;
        }
        if next_cp < checkpoints.len() && checkpoints[next_cp] == t {
            next_cp += 1;
            state.x_prev.clone_from(&state.x);
            state.x_bar.clone_from(&state.x);
            let rec = record(problem, &state, opts.reference, clock.now() - start)?;
            let stop = settings.gap_tolerance > 0.0 && rec.gap.is_some_and(|g| g <= settings.gap_tolerance);
            trace.push(rec);
            if stop {
                break;
            }
        }
    }
    state.x_prev.clone_from(&state.x);
    state.x_bar.clone_from(&state.x);
    Ok(RunOutput {
        state,
        trace,
        stats,
        warnings: Vec::new(),
    })
}

fn refresh_primal(
    a: &DataMatrix,
    k: usize,
    aty: &[f64],
    x: &mut [f64],
    primal_from: &impl Fn(&[f64], usize) -> Result<f64>,
) -> Result<()> {
    match a {
        DataMatrix::Sparse(s) => {
            for &c in s.row(k).0 {
                x[c] = primal_from(aty, c)?;
            }
        }
        _ => {
            for c in 0..x.len() {
                x[c] = primal_from(aty, c)?;
            }
        }
    }
    Ok(())
}
