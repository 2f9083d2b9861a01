use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::state::{IterateState, Maintained, MaintainedKind};
use super::theory;
use super::trace::{describe_divergence, RunOptions, RunOutput, SolverStats, TraceRecord};
use super::SolverParams;
use crate::data::{solver_rng, DataMatrix, DenseMatrix, IndexSample, SubsetSampler};
use crate::error::{invalid, Result};
use crate::math::{axpy, dist_sq, dot};
use crate::metrics::{dual_objective, primal_objective, ReferenceSolution};
use crate::problem::Problem;
use crate::proximal::psd_prox;

/// Relative tolerance of the periodic maintained-product check.
pub const DRIFT_TOLERANCE: f64 = 1e-8;

/// One DSPDC iteration over chosen dual and primal blocks, with scratch space.
struct Engine<'a> {
    problem: &'a Problem,
    params: &'a SolverParams,
    dy: Vec<(usize, f64)>,
    dx: Vec<(usize, f64)>,
    /// `Σ Δy_k A_k` over the current dual sample; only used when `Aᵀy` is
    /// maintained and `n ≠ m`.
    corr: Vec<f64>,
    block_v: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(problem: &'a Problem, params: &'a SolverParams) -> Self {
        Engine {
            problem,
            params,
            dy: Vec::new(),
            dx: Vec::new(),
            corr: vec![0.0; problem.primal_dim()],
            block_v: Vec::new(),
        }
    }

    fn step(
        &mut self,
        state: &mut IterateState,
        dual_blocks: &[usize],
        primal_blocks: &[usize],
        stats: &mut SolverStats,
    ) -> Result<()> {
        let problem = self.problem;
        let params = self.params;
        let a = problem.matrix();
        let part = problem.partition();
        let losses = problem.losses();
        let reg = problem.regularizer();
        let n = problem.n() as f64;
        let ry = n / params.m as f64;
        let theta1 = params.theta + 1.0;
        let rank = a.as_factorized().map_or(0, |f| f.rank()) as u64;

        for &i in &state.last_dual {
            for k in part.dual_range(i) {
                state.y_bar[k] = state.y[k];
            }
        }

        self.dy.clear();
        for &i in dual_blocks {
            for k in part.dual_range(i) {
                let u = match &state.maintained {
                    Maintained::DualProduct { .. } => {
                        stats.flops += a.row_cost(k);
                        a.row_dot_unchecked(k, &state.x_bar)
                    }
                    Maintained::PrimalProduct { ax_bar, .. } => ax_bar[k],
                    Maintained::Factorized { v_bar, .. } => {
                        stats.flops += rank;
                        dot(a.as_factorized().unwrap().u_row(k), v_bar)
                    }
                };
                let old = state.y[k];
                let new = losses[k].dual_prox(u, old, params.sigma, n)?;
                state.y[k] = new;
                state.y_bar[k] = old + ry * (new - old);
                self.dy.push((k, new - old));
            }
        }
        stats.dual_coordinate_updates += self.dy.len() as u64;

        match &mut state.maintained {
            Maintained::DualProduct { aty } => {
                for &(k, d) in &self.dy {
                    if d != 0.0 {
                        a.axpy_row(k, d, aty);
                        stats.flops += a.row_cost(k);
                        if ry != 1.0 {
                            a.axpy_row(k, d, &mut self.corr);
                            stats.flops += a.row_cost(k);
                        }
                    }
                }
            }
            Maintained::Factorized { u, u_bar, .. } => {
                let f = a.as_factorized().unwrap();
                u_bar.copy_from_slice(u);
                for &(k, d) in &self.dy {
                    if d != 0.0 {
                        axpy(ry * d, f.u_row(k), u_bar);
                        axpy(d, f.u_row(k), u);
                        stats.flops += 2 * rank;
                    }
                }
            }
            Maintained::PrimalProduct { .. } => {}
        }

        for &j in &state.last_primal {
            for c in part.primal_range(j) {
                state.x_bar[c] = state.x[c];
                state.x_prev[c] = state.x[c];
            }
        }

        self.dx.clear();
        for &j in primal_blocks {
            let range = part.primal_range(j);
            self.block_v.clear();
            for c in range.clone() {
                let v = match &state.maintained {
                    Maintained::DualProduct { aty } => aty[c] + (ry - 1.0) * self.corr[c],
                    Maintained::PrimalProduct { .. } => {
                        stats.flops += a.col_cost(c);
                        a.col_dot_unchecked(c, &state.y_bar)
                    }
                    Maintained::Factorized { u_bar, .. } => {
                        stats.flops += rank;
                        dot(a.as_factorized().unwrap().v_col(c), u_bar)
                    }
                };
                self.block_v.push(v);
            }
            if reg.is_psd() {
                let dim = libm::sqrt(range.len() as f64) as usize;
                let g = DenseMatrix::new(dim, dim, self.block_v.clone())?;
                let center = DenseMatrix::new(dim, dim, state.x[range.clone()].to_vec())?;
                let next = psd_prox(&g, &center, params.tau, reg.modulus(), n)?;
                stats.eigendecompositions += 1;
                for (off, c) in range.enumerate() {
                    self.set_primal(state, c, next.data()[off], theta1);
                }
            } else {
                for (off, c) in range.enumerate() {
                    let next = reg.primal_prox(self.block_v[off], state.x[c], params.tau, n)?;
                    self.set_primal(state, c, next, theta1);
                }
            }
        }
        stats.primal_coordinate_updates += self.dx.len() as u64;

        match &mut state.maintained {
            Maintained::PrimalProduct { ax, ax_bar } => {
                ax_bar.copy_from_slice(ax);
                for &(c, d) in &self.dx {
                    if d != 0.0 {
                        a.axpy_col(c, theta1 * d, ax_bar);
                        a.axpy_col(c, d, ax);
                        stats.flops += 2 * a.col_cost(c);
                    }
                }
            }
            Maintained::Factorized { v, v_bar, .. } => {
                let f = a.as_factorized().unwrap();
                v_bar.copy_from_slice(v);
                for &(c, d) in &self.dx {
                    if d != 0.0 {
                        axpy(theta1 * d, f.v_col(c), v_bar);
                        axpy(d, f.v_col(c), v);
                        stats.flops += 2 * rank;
                    }
                }
            }
            Maintained::DualProduct { .. } => {
                if ry != 1.0 {
                    for &(k, d) in &self.dy {
                        if d != 0.0 {
                            clear_row_support(a, k, &mut self.corr);
                        }
                    }
                }
            }
        }

        state.last_dual.clear();
        state.last_dual.extend_from_slice(dual_blocks);
        state.last_primal.clear();
        state.last_primal.extend_from_slice(primal_blocks);
        state.iteration += 1;
        stats.iterations += 1;
        Ok(())
    }

    #[inline]
    fn set_primal(&mut self, state: &mut IterateState, c: usize, next: f64, theta1: f64) {
        let old = state.x[c];
        state.x_prev[c] = old;
        state.x[c] = next;
        state.x_bar[c] = old + theta1 * (next - old);
        self.dx.push((c, next - old));
    }
}

fn clear_row_support(a: &DataMatrix, k: usize, out: &mut [f64]) {
    match a {
        DataMatrix::Sparse(s) => {
            for &j in s.row(k).0 {
                out[j] = 0.0;
            }
        }
        _ => out.iter_mut().for_each(|v| *v = 0.0),
    }
}

fn default_kind(problem: &Problem, params: &SolverParams) -> MaintainedKind {
    if problem.matrix().as_factorized().is_some() {
        MaintainedKind::Factorized
    } else {
        MaintainedKind::by_rule(problem.n(), problem.p(), params.q, params.m)
    }
}

/// A DSPDC run that can be advanced one iteration at a time.
pub struct DspdcSolver<'a> {
    engine: Engine<'a>,
    state: IterateState,
    stats: SolverStats,
    rng: ChaCha8Rng,
    dual_sampler: SubsetSampler,
    primal_sampler: SubsetSampler,
    dual_buf: Vec<usize>,
}

impl<'a> DspdcSolver<'a> {
    /// `kind = None` applies the default: factorized products for factorized
    /// storage, otherwise the cheaper side by the `n/m ≥ p/q` rule.
    pub fn new(
        problem: &'a Problem,
        params: &'a SolverParams,
        kind: Option<MaintainedKind>,
        x0: Option<&[f64]>,
        y0: Option<&[f64]>,
    ) -> Result<Self> {
        params.validate_for(problem)?;
        let kind = kind.unwrap_or_else(|| default_kind(problem, params));
        let state = IterateState::new(problem, kind, x0, y0)?;
        Ok(DspdcSolver {
            engine: Engine::new(problem, params),
            state,
            stats: SolverStats::default(),
            rng: solver_rng(params.seed),
            dual_sampler: SubsetSampler::new(problem.n(), params.m)?,
            primal_sampler: SubsetSampler::new(problem.p(), params.q)?,
            dual_buf: Vec::with_capacity(params.m),
        })
    }

    /// Draws `I` then `J` and performs one iteration.
    pub fn step(&mut self) -> Result<()> {
        self.dual_buf.clear();
        self.dual_buf.extend_from_slice(self.dual_sampler.draw(&mut self.rng));
        let j = self.primal_sampler.draw(&mut self.rng);
        self.engine.step(&mut self.state, &self.dual_buf, j, &mut self.stats)
    }

    pub fn check_drift(&mut self) -> Result<()> {
        self.stats.drift_checks += 1;
        self.state.check_drift(self.engine.problem.matrix(), DRIFT_TOLERANCE)
    }

    pub fn state(&self) -> &IterateState {
        &self.state
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn into_state(self) -> IterateState {
        self.state
    }
}

/// Applies one iteration with caller-chosen block samples and returns the new
/// state.
pub fn dspdc_step(
    state: &IterateState,
    problem: &Problem,
    params: &SolverParams,
    dual: &IndexSample,
    primal: &IndexSample,
) -> Result<IterateState> {
    params.validate_for(problem)?;
    if dual.universe() != problem.n() || dual.len() != params.m {
        return Err(invalid(format!(
            "dual sample must hold {} of {} blocks",
            params.m,
            problem.n()
        )));
    }
    if primal.universe() != problem.p() || primal.len() != params.q {
        return Err(invalid(format!(
            "primal sample must hold {} of {} blocks",
            params.q,
            problem.p()
        )));
    }
    if state.x.len() != problem.primal_dim() || state.y.len() != problem.dual_dim() {
        return Err(invalid("state does not match the problem dimensions"));
    }
    let mut next = state.clone();
    let mut stats = SolverStats::default();
    Engine::new(problem, params).step(&mut next, dual.indices(), primal.indices(), &mut stats)?;
    Ok(next)
}

pub(crate) fn record(
    problem: &Problem,
    state: &IterateState,
    reference: Option<&ReferenceSolution>,
    elapsed: f64,
) -> Result<TraceRecord> {
    let primal = primal_objective(problem, &state.x)?;
    let dual = dual_objective(problem, &state.y)?;
    let gap = dual.map(|d| primal - d);
    let (dx, dy) = match reference {
        Some(r) => (Some(dist_sq(&state.x, &r.x_star)), Some(dist_sq(&state.y, &r.y_star))),
        None => (None, None),
    };
    Ok(TraceRecord {
        iteration: state.iteration,
        elapsed,
        primal,
        dual,
        gap,
        dist_sq: dx.zip(dy).map(|(a, b)| a + b),
        dist_x_sq: dx,
        dist_y_sq: dy,
    })
}

fn run(problem: &Problem, params: &SolverParams, opts: &RunOptions<'_>, kind: Option<MaintainedKind>) -> Result<RunOutput> {
    if let Some(r) = opts.reference {
        if r.x_star.len() != problem.primal_dim() || r.y_star.len() != problem.dual_dim() {
            return Err(invalid("reference solution does not match the problem dimensions"));
        }
    }
    let clock = opts.clock;
    let start = clock.now();
    let mut solver = DspdcSolver::new(problem, params, kind, opts.x0, opts.y0)?;
    let first = record(problem, &solver.state, opts.reference, clock.now() - start)?;
    let omega0 = match (first.dist_x_sq, first.dist_y_sq) {
        (Some(dx), Some(dy)) => Some(theory::omega_initial(params, dx, dy)),
        _ => None,
    };
    let mut trace = vec![first];
    let mut warnings = Vec::new();
    let mut warned = false;
    let checkpoints = opts.checkpoints.iterations();
    let mut next_cp = 0;

    for t in 1..=params.max_iters {
        solver.step()?;
        if opts.drift_check_every > 0 && t % opts.drift_check_every == 0 {
            solver.check_drift()?;
        }
        if next_cp < checkpoints.len() && checkpoints[next_cp] == t {
            next_cp += 1;
            let rec = record(problem, &solver.state, opts.reference, clock.now() - start)?;
            if let (Some(o0), Some(dx), Some(dy)) = (omega0, rec.dist_x_sq, rec.dist_y_sq) {
                let om = theory::omega(params, dx, dy);
                if !warned && om > 10.0 * o0 {
                    warned = true;
                    let msg = describe_divergence(t, om, o0);
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
            let stop = params.gap_tolerance > 0.0 && rec.gap.is_some_and(|g| g <= params.gap_tolerance);
            log::debug!(
                "iteration {t}: primal {:.6e} gap {:?}",
                rec.primal,
                rec.gap
            );
            trace.push(rec);
            if stop {
                break;
            }
        }
    }
    let stats = solver.stats;
    Ok(RunOutput {
        state: solver.state,
        trace,
        stats,
        warnings,
    })
}

/// Scalar-coordinate DSPDC. Factorized storage is handled with the low-rank
/// products automatically.
pub fn dspdc_run(problem: &Problem, params: &SolverParams, opts: &RunOptions<'_>) -> Result<RunOutput> {
    if !problem.partition().is_scalar() {
        return Err(invalid("dspdc_run needs scalar coordinates; use bdspdc_run for block partitions"));
    }
    run(problem, params, opts, None)
}

/// DSPDC maintaining a chosen product instead of the default.
pub fn dspdc_run_maintaining(
    problem: &Problem,
    params: &SolverParams,
    opts: &RunOptions<'_>,
    kind: MaintainedKind,
) -> Result<RunOutput> {
    run(problem, params, opts, Some(kind))
}

/// DSPDC on `A = UV`, with `O(d(m + q))` work per iteration.
pub fn dspdc_factorized_run(problem: &Problem, params: &SolverParams, opts: &RunOptions<'_>) -> Result<RunOutput> {
    if problem.matrix().as_factorized().is_none() {
        return Err(invalid(format!(
            "factorized run needs factorized storage, got {}",
            problem.matrix().storage_name()
        )));
    }
    run(problem, params, opts, Some(MaintainedKind::Factorized))
}

/// Block DSPDC for any partition, including PSD matrix blocks.
pub fn bdspdc_run(problem: &Problem, params: &SolverParams, opts: &RunOptions<'_>) -> Result<RunOutput> {
    run(problem, params, opts, None)
}
