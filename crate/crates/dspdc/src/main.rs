use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dspdc::cache::{problem_key, resolve_reference, ReferenceCache};
use dspdc::config::{CheckpointSpec, ExperimentConfig, InstanceSpec, VerifyConfig};
use dspdc::error::{CliError, Result};
use dspdc::experiment::run_experiment;
use dspdc::formats::{read_problem, write_json_atomic, write_problem, ReferenceDocument, FORMAT_VERSION, REFERENCE_FORMAT};
use dspdc::verify::verify_theorems;
use serde_json::{Map, Number, Value};

#[derive(Parser)]
#[command(name = "dspdc", version, about = "Doubly stochastic primal-dual coordinate solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write traces plus a manifest.
    Run {
        config: PathBuf,
        /// Base seed; repetition r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (must not exist or be empty).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<u64>,
        /// none | linear:EVERY | geometric:FIRST:FACTOR | list:T1,T2,...
        #[arg(long)]
        checkpoints: Option<String>,
    },
    /// Check the convergence envelopes and print a JSON report.
    Verify {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// list:T1,T2,...
        #[arg(long)]
        checkpoints: Option<String>,
    },
    /// Generate a problem file, e.g. `gen synthetic n=100 p=20 l2=0.01 -o p.json`.
    Gen {
        generator: String,
        /// key=value generator parameters.
        params: Vec<String>,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify (or fetch from the cache) a reference solution for a problem file.
    Reference {
        problem: PathBuf,
        /// Write the reference document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
}

fn parse_value(s: &str) -> Value {
    if let Ok(u) = s.parse::<u64>() {
        Value::Number(u.into())
    } else if let Some(n) = s.parse::<f64>().ok().and_then(Number::from_f64) {
        Value::Number(n)
    } else {
        Value::String(s.to_owned())
    }
}

fn instance_from_args(generator: &str, params: &[String], seed: Option<u64>) -> Result<InstanceSpec> {
    let mut obj = Map::new();
    obj.insert("generator".into(), Value::String(generator.into()));
    for kv in params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got `{kv}`")))?;
        obj.insert(k.into(), parse_value(v));
    }
    if let Some(s) = seed {
        obj.insert("seed".into(), Value::Number(s.into()));
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Config(format!("generator `{generator}`: {e}")))
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json_atomic(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if matches!(e, CliError::Config(_) | CliError::Json { .. }) { 2 } else { 1 })
        }
    }
}

/// `Ok(false)` means the command ran but a check failed.
fn dispatch(command: Command) -> Result<bool> {
    let cache = ReferenceCache::from_env()?;
    match command {
        Command::Run {
            config,
            seed,
            out,
            max_iters,
            checkpoints,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(t) = max_iters {
                cfg.max_iters = t;
            }
            if let Some(c) = checkpoints {
                cfg.checkpoints = CheckpointSpec::parse(&c)?;
            }
            let output = run_experiment(&cfg, cache.as_ref())?;
            log::info!("wrote {} runs to {}", output.manifest.runs.len(), output.dir.display());
            Ok(true)
        }
        Command::Verify {
            config,
            seed,
            out,
            checkpoints,
        } => {
            let mut cfg = VerifyConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(c) = checkpoints {
                match CheckpointSpec::parse(&c)? {
                    CheckpointSpec::List { at } => cfg.checkpoints = at,
                    _ => return Err(CliError::Config("verify takes --checkpoints list:T1,T2,...".into())),
                }
            }
            let report = verify_theorems(&cfg, cache.as_ref())?;
            emit_json(&report, out.as_deref())?;
            Ok(report.passed)
        }
        Command::Gen {
            generator,
            params,
            out,
            seed,
        } => {
            let spec = instance_from_args(&generator, &params, seed)?;
            if matches!(spec, InstanceSpec::ProblemFile { .. }) {
                return Err(CliError::Config("`problem_file` is not a generator".into()));
            }
            let g = spec.build()?;
            write_problem(&out, &g)?;
            log::info!("wrote {} ({}x{})", out.display(), g.problem.n(), g.problem.p());
            Ok(true)
        }
        Command::Reference { problem, out, budget } => {
            let g = read_problem(&problem)?;
            let (reference, origin) = resolve_reference(&g, cache.as_ref(), budget)?;
            log::info!("reference origin: {origin:?}, gap {:e}", reference.gap_at_certification);
            let doc = ReferenceDocument {
                format: REFERENCE_FORMAT.into(),
                version: FORMAT_VERSION,
                key: problem_key(&g)?,
                provenance: g.provenance.clone(),
                reference,
            };
            emit_json(&doc, out.as_deref())?;
            Ok(true)
        }
    }
}
