//! Empirical check of the convergence envelopes: averages over seeds are
//! compared against the theoretical bounds at chosen iterations.

use dspdc_core::data::matrix_norm_sq;
use dspdc_core::solvers::{bdspdc_run, theory};
use dspdc_core::{Checkpoints, Mode, Provenance, RunOptions, RunSettings, SolverParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{resolve_reference, Origin, ReferenceCache};
use crate::config::VerifyConfig;
use crate::error::{CliError, Result};

pub const REPORT_FORMAT: &str = "dspdc/verify";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub mode: Mode,
    pub iteration: u64,
    /// Mean over seeds of the weighted distance (distance mode) or the gap.
    pub measured: f64,
    /// The theoretical bound at this iteration, before slack.
    pub bound: f64,
    /// `measured / bound`.
    pub ratio: f64,
    /// Theoretical contraction factor per iteration.
    pub rate: f64,
    /// `(measured / initial)^(1/t)`.
    pub empirical_rate: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format: String,
    pub provenance: Provenance,
    pub reference_origin: Origin,
    pub q: usize,
    pub m: usize,
    pub scale_constant: f64,
    pub seeds: u64,
    pub slack: f64,
    pub checks: Vec<EnvelopeCheck>,
    pub passed: bool,
}

fn mean(v: impl Iterator<Item = f64>, count: u64) -> f64 {
    v.sum::<f64>() / count as f64
}

/// Runs `cfg.seeds` independent DSPDC runs per mode and checks the mean
/// against `slack` times the envelope at every listed iteration. Parameters
/// (including an overridden `θ`) are validated before anything runs.
pub fn verify_theorems(cfg: &VerifyConfig, cache: Option<&ReferenceCache>) -> Result<VerifyReport> {
    if cfg.seeds == 0 || cfg.modes.is_empty() {
        return Err(CliError::Config("need at least one seed and one mode".into()));
    }
    if !(cfg.slack >= 1.0) {
        return Err(CliError::Config("slack must be at least 1".into()));
    }
    let checkpoints = Checkpoints::new(cfg.checkpoints.clone())?;
    let max_iters = *checkpoints
        .iterations()
        .last()
        .ok_or_else(|| CliError::Config("no checkpoints to verify".into()))?;
    let generated = cfg.instance.build()?;
    let problem = &generated.problem;

    let mut all_params = Vec::with_capacity(cfg.modes.len());
    for &mode in &cfg.modes {
        let settings = RunSettings {
            max_iters,
            gap_tolerance: 0.0,
            seed: cfg.base_seed,
            mode,
            lambda: cfg.lambda,
        };
        let mut params = SolverParams::for_problem(problem, cfg.q, cfg.m, &settings)?;
        if let Some(theta) = cfg.theta {
            params.theta = theta;
        }
        params.validate_for(problem)?;
        all_params.push(params);
    }

    let (reference, origin) = resolve_reference(&generated, cache, cfg.reference.budget)?;
    let norm_a_sq = matrix_norm_sq(problem.matrix())?;
    let mut checks = Vec::new();
    for params in &all_params {
        let opts = RunOptions::default()
            .with_checkpoints(checkpoints.clone())
            .with_reference(&reference);
        let traces = (0..cfg.seeds)
            .into_par_iter()
            .map(|s| bdspdc_run(problem, &params.clone().with_seed(cfg.base_seed + s), &opts).map(|o| o.trace))
            .collect::<dspdc_core::Result<Vec<_>>>()?;
        let first = &traces[0][0];
        let (dx0, dy0) = (first.dist_x_sq.unwrap_or(0.0), first.dist_y_sq.unwrap_or(0.0));
        let gap0 = first.gap.unwrap_or(f64::INFINITY);
        let rate = theory::rate(params);
        for (k, &t) in checkpoints.iterations().iter().enumerate() {
            let at = |f: &dyn Fn(&dspdc_core::TraceRecord) -> f64| {
                mean(
                    traces.iter().map(|tr| tr.get(k + 1).map_or(f64::INFINITY, f)),
                    cfg.seeds,
                )
            };
            let (measured, initial, bound) = match params.mode {
                Mode::Distance => {
                    let omega = at(&|r| {
                        theory::omega(params, r.dist_x_sq.unwrap_or(f64::INFINITY), r.dist_y_sq.unwrap_or(f64::INFINITY))
                    });
                    let omega0 = theory::omega_initial(params, dx0, dy0);
                    (omega, omega0, theory::distance_bound(params, omega0, t))
                }
                Mode::Gap => {
                    let gap = at(&|r| r.gap.unwrap_or(f64::INFINITY));
                    (gap, gap0, theory::gap_bound(params, norm_a_sq, dx0, dy0, gap0, t))
                }
            };
            let ratio = measured / bound;
            let check = EnvelopeCheck {
                mode: params.mode,
                iteration: t,
                measured,
                bound,
                ratio,
                rate,
                empirical_rate: (measured / initial).powf(1.0 / t as f64),
                pass: measured <= cfg.slack * bound,
            };
            log::info!(
                "{:?} t={t}: measured {measured:.3e}, bound {bound:.3e}, ratio {ratio:.3}",
                params.mode
            );
            checks.push(check);
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        format: REPORT_FORMAT.into(),
        provenance: generated.provenance.clone(),
        reference_origin: origin,
        q: cfg.q,
        m: cfg.m,
        scale_constant: all_params[0].scale_constant,
        seeds: cfg.seeds,
        slack: cfg.slack,
        checks,
        passed,
    })
}
