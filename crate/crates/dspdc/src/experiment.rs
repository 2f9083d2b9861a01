//! Config-driven experiments: one CSV trace per (solver, seed) and a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dspdc_core::solvers::{bdspdc_run, dspdc_run, sdca_run};
use dspdc_core::{
    Checkpoints, Clock, GeneratedProblem, Problem, Provenance, ReferenceSolution, ReferenceSource, RunOptions,
    RunOutput, RunSettings, SolverParams, SolverStats, TraceRecord,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{problem_key, resolve_reference, Origin, ReferenceCache};
use crate::config::{ExperimentConfig, SolverKind, SolverSpec};
use crate::error::{io_err, CliError, Result};
use crate::formats::{write_json_atomic, Dimensions};

pub const MANIFEST_FORMAT: &str = "dspdc/manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 6] = ["iteration", "elapsed_s", "primal", "dual", "gap", "dist_sq"];

/// Wall time since construction, from [`Instant`].
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn start() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub origin: Origin,
    pub source: ReferenceSource,
    pub key: String,
    pub primal_value: f64,
    pub gap_at_certification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub label: String,
    pub solver: SolverKind,
    /// Step sizes; absent for SDCA.
    pub params: Option<SolverParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub seed: u64,
    pub repetition: u64,
    pub file: String,
    pub iterations: u64,
    pub last: TraceRecord,
    /// Final primal value minus the reference primal value.
    pub primal_suboptimality: Option<f64>,
    pub stats: SolverStats,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub name: Option<String>,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub library_version: String,
    pub runner_version: String,
    /// Seed of repetition `r` is `base_seed + r`.
    pub seeds: Vec<u64>,
    pub provenance: Provenance,
    pub dimensions: Dimensions,
    pub reference: Option<ReferenceInfo>,
    pub solvers: Vec<SolverEntry>,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// A solver whose parameters were resolved and checked before any run.
struct Prepared {
    spec: SolverSpec,
    label: String,
    params: Option<SolverParams>,
}

fn prepare(problem: &Problem, spec: &SolverSpec, cfg: &ExperimentConfig) -> Result<Prepared> {
    let label = spec.label();
    let settings = RunSettings {
        max_iters: cfg.max_iters,
        gap_tolerance: cfg.gap_tolerance,
        seed: cfg.base_seed,
        mode: spec.mode,
        lambda: spec.lambda,
    };
    let ctx = |e: dspdc_core::Error| CliError::Config(format!("solver `{label}`: {e}"));
    let params = match spec.solver {
        SolverKind::Sdca => {
            if spec.q.is_some() || spec.theta.is_some() {
                return Err(CliError::Config(format!("solver `{label}`: SDCA takes no q or theta")));
            }
            if spec.m.is_some_and(|m| m != 1) {
                return Err(CliError::Config(format!("solver `{label}`: SDCA updates one coordinate")));
            }
            if problem.regularizer().is_psd() {
                return Err(CliError::Config(format!("solver `{label}`: SDCA needs a scalar regularizer")));
            }
            None
        }
        SolverKind::Dspdc | SolverKind::Spdc => {
            let q = match spec.solver {
                SolverKind::Spdc => {
                    if spec.q.is_some_and(|q| q != problem.p()) {
                        return Err(CliError::Config(format!("solver `{label}`: SPDC always uses q = p")));
                    }
                    problem.p()
                }
                _ => spec.q.unwrap_or(1),
            };
            let mut params = SolverParams::for_problem(problem, q, spec.m.unwrap_or(1), &settings).map_err(ctx)?;
            if let Some(theta) = spec.theta {
                params.theta = theta;
            }
            params.validate_for(problem).map_err(ctx)?;
            Some(params)
        }
    };
    Ok(Prepared {
        spec: spec.clone(),
        label,
        params,
    })
}

fn execute(
    problem: &Problem,
    prepared: &Prepared,
    seed: u64,
    cfg: &ExperimentConfig,
    opts: &RunOptions<'_>,
) -> dspdc_core::Result<RunOutput> {
    match &prepared.params {
        Some(params) => {
            let params = params.clone().with_seed(seed);
            if problem.partition().is_scalar() {
                dspdc_run(problem, &params, opts)
            } else {
                bdspdc_run(problem, &params, opts)
            }
        }
        None => {
            let settings = RunSettings {
                max_iters: cfg.max_iters,
                gap_tolerance: cfg.gap_tolerance,
                seed,
                mode: prepared.spec.mode,
                lambda: prepared.spec.lambda,
            };
            sdca_run(problem, &settings, opts)
        }
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            format_float(r.elapsed),
            format_float(r.primal),
            format_opt(r.dual),
            format_opt(r.gap),
            format_opt(r.dist_sq),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// One parsed CSV row; `None` for empty fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub elapsed_s: f64,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub dist_sq: Option<f64>,
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(CliError::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |field: &str| CliError::Parse {
            line,
            message: format!("bad {field} value"),
        };
        let num = |k: usize| -> Result<Option<f64>> {
            let s = rec.get(k).unwrap_or("");
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(CSV_HEADER[k]))
            }
        };
        rows.push(TraceRow {
            iteration: rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("iteration"))?,
            elapsed_s: num(1)?.ok_or_else(|| bad("elapsed_s"))?,
            primal: num(2)?.ok_or_else(|| bad("primal"))?,
            dual: num(3)?,
            gap: num(4)?,
            dist_sq: num(5)?,
        });
    }
    Ok(rows)
}

fn trace_file_name(label: &str, seed: u64) -> String {
    format!("{label}_seed{seed}.csv")
}

/// Creates a hidden staging directory next to `out`; errors here are
/// configuration errors since nothing has run yet.
fn staging_dir(out: &Path) -> Result<tempfile::TempDir> {
    if out.exists() {
        let mut entries = fs::read_dir(out).map_err(io_err(out))?;
        if entries.next().is_some() {
            return Err(CliError::Config(format!("output directory {} is not empty", out.display())));
        }
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
    let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    tempfile::Builder::new()
        .prefix(&format!(".{name}.staging"))
        .tempdir_in(&parent)
        .map_err(|e| CliError::Config(format!("output location {} is not writable: {e}", parent.display())))
}

/// Validates everything, runs every (solver, repetition) pair and moves the
/// finished directory into place. On any error nothing is left at
/// `output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, cache: Option<&ReferenceCache>) -> Result<ExperimentOutput> {
    cfg.validate_shape()?;
    let generated: GeneratedProblem = cfg.instance.build().map_err(|e| match e {
        CliError::Core(c) => CliError::Config(format!("instance: {c}")),
        other => other,
    })?;
    let problem = &generated.problem;
    let checkpoints: Checkpoints = cfg.checkpoints.schedule(cfg.max_iters)?;
    let prepared = cfg
        .solvers
        .iter()
        .map(|s| prepare(problem, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let staging = staging_dir(&cfg.output_dir)?;

    let reference: Option<(ReferenceSolution, ReferenceInfo)> = if cfg.reference.enabled {
        let (r, origin) = resolve_reference(&generated, cache, cfg.reference.budget)?;
        let info = ReferenceInfo {
            origin,
            source: r.source,
            key: problem_key(&generated)?,
            primal_value: r.primal_value(problem)?,
            gap_at_certification: r.gap_at_certification,
        };
        log::info!("reference: {:?} ({:?}), primal {:.12e}", info.source, origin, info.primal_value);
        Some((r, info))
    } else {
        None
    };

    let seeds: Vec<u64> = (0..cfg.repetitions).map(|r| cfg.base_seed + r).collect();
    let jobs: Vec<(&Prepared, u64, u64)> = prepared
        .iter()
        .flat_map(|p| seeds.iter().enumerate().map(move |(r, &s)| (p, r as u64, s)))
        .collect();
    let stage = staging.path();
    let run_one = |&(prep, rep, seed): &(&Prepared, u64, u64)| -> Result<RunSummary> {
        let clock = MonotonicClock::start();
        let mut opts = RunOptions::default().with_checkpoints(checkpoints.clone()).with_clock(&clock);
        if let Some((r, _)) = &reference {
            opts = opts.with_reference(r);
        }
        let out = execute(problem, prep, seed, cfg, &opts).map_err(|source| CliError::Run {
            label: prep.label.clone(),
            seed,
            source,
        })?;
        let file = trace_file_name(&prep.label, seed);
        write_trace_csv(&stage.join(&file), &out.trace)?;
        let last = out.trace.last().cloned().expect("the initial point is always recorded");
        let primal_suboptimality = reference.as_ref().map(|(_, info)| last.primal - info.primal_value);
        log::info!("{} seed {seed}: {} iterations, primal {:.12e}", prep.label, out.stats.iterations, last.primal);
        Ok(RunSummary {
            label: prep.label.clone(),
            seed,
            repetition: rep,
            file,
            iterations: out.stats.iterations,
            last,
            primal_suboptimality,
            stats: out.stats,
            warnings: out.warnings,
        })
    };
    let runs: Vec<RunSummary> = if cfg.parallel {
        jobs.par_iter().map(run_one).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run_one).collect::<Result<_>>()?
    };

    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        library_version: dspdc_core::VERSION.into(),
        runner_version: env!("CARGO_PKG_VERSION").into(),
        seeds,
        provenance: generated.provenance.clone(),
        dimensions: Dimensions::of(&generated),
        reference: reference.map(|(_, info)| info),
        solvers: prepared
            .iter()
            .map(|p| SolverEntry {
                label: p.label.clone(),
                solver: p.spec.solver,
                params: p.params.clone(),
            })
            .collect(),
        runs,
    };
    write_json_atomic(&stage.join("manifest.json"), &manifest)?;
    let staged = staging.keep();
    fs::rename(&staged, &cfg.output_dir).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        CliError::Io {
            path: cfg.output_dir.clone(),
            source: e,
        }
    })?;
    Ok(ExperimentOutput {
        dir: cfg.output_dir.clone(),
        manifest,
    })
}
