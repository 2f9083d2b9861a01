//! JSON experiment and verification configurations.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use dspdc_core::instances::{gen_lower_bound, gen_matrix_risk, gen_synthetic, gen_synthetic_factorized};
use dspdc_core::{
    BlockPartition, Checkpoints, DataMatrix, GeneratedProblem, LambdaPolicy, LossKind, Mode, Problem,
    Provenance, Regularizer, SmoothLoss,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, json_err, CliError, Result};
use crate::formats::read_problem;
use crate::libsvm::parse_libsvm;

fn default_loss() -> LossKind {
    LossKind::SmoothedHinge
}

/// How to build the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    Synthetic {
        n: usize,
        p: usize,
        #[serde(default)]
        l1: f64,
        l2: f64,
        #[serde(default)]
        seed: u64,
    },
    SyntheticFactorized {
        n: usize,
        p: usize,
        d: usize,
        #[serde(default)]
        l1: f64,
        l2: f64,
        #[serde(default)]
        seed: u64,
    },
    MatrixRisk {
        n: usize,
        p: usize,
        d: usize,
        lambda: f64,
        #[serde(default)]
        seed: u64,
    },
    LowerBound {
        n: usize,
        q: f64,
    },
    Libsvm {
        path: PathBuf,
        #[serde(default = "default_loss")]
        loss: LossKind,
        #[serde(default)]
        l1: f64,
        l2: f64,
    },
    /// A problem document written by `dspdc gen`.
    ProblemFile { path: PathBuf },
}

fn scalar_regularizer(l1: f64, l2: f64) -> Result<Regularizer> {
    Ok(if l1 == 0.0 {
        Regularizer::l2(l2)?
    } else {
        Regularizer::elastic_net(l2, l1)?
    })
}

impl InstanceSpec {
    pub fn build(&self) -> Result<GeneratedProblem> {
        Ok(match self {
            InstanceSpec::Synthetic { n, p, l1, l2, seed } => gen_synthetic(*n, *p, scalar_regularizer(*l1, *l2)?, *seed)?,
            InstanceSpec::SyntheticFactorized { n, p, d, l1, l2, seed } => {
                gen_synthetic_factorized(*n, *p, *d, scalar_regularizer(*l1, *l2)?, *seed)?
            }
            InstanceSpec::MatrixRisk { n, p, d, lambda, seed } => gen_matrix_risk(*n, *p, *d, *lambda, *seed)?,
            InstanceSpec::LowerBound { n, q } => gen_lower_bound(*n, *q)?.generated()?,
            InstanceSpec::Libsvm { path, loss, l1, l2 } => {
                let file = File::open(path).map_err(io_err(path))?;
                let data = parse_libsvm(BufReader::new(file))?;
                let losses = data
                    .labels
                    .iter()
                    .map(|&b| match loss {
                        LossKind::Square => SmoothLoss::square(b),
                        k => SmoothLoss::classification(*k, b),
                    })
                    .collect::<dspdc_core::Result<Vec<_>>>()?;
                let (n, p) = (data.matrix.rows(), data.matrix.cols());
                let reg = scalar_regularizer(*l1, *l2)?;
                let problem = Problem::new(DataMatrix::Sparse(data.matrix), losses, reg, BlockPartition::scalar(n, p))?;
                let mut provenance = Provenance::new("libsvm", 0).with("l1", *l1).with("l2", *l2);
                provenance.source = Some(path.display().to_string());
                GeneratedProblem {
                    problem,
                    labels: data.labels,
                    provenance,
                    closed_form: None,
                }
            }
            InstanceSpec::ProblemFile { path } => read_problem(path)?,
        })
    }

    /// Resolves relative paths against the directory of the config file.
    fn rebase(&mut self, base: &Path) {
        if let InstanceSpec::Libsvm { path, .. } | InstanceSpec::ProblemFile { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// DSPDC; block partitions run the block variant.
    Dspdc,
    /// DSPDC with `q = p`.
    Spdc,
    Sdca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub solver: SolverKind,
    /// Name used for trace files; defaults to the solver name.
    #[serde(default)]
    pub label: Option<String>,
    /// Primal blocks per iteration (DSPDC only; SPDC always uses all).
    #[serde(default)]
    pub q: Option<usize>,
    /// Dual blocks per iteration; defaults to 1.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub lambda: LambdaPolicy,
    #[serde(default)]
    pub mode: Mode,
    /// Overrides the extrapolation weight; checked against the step-size
    /// rules before anything runs.
    #[serde(default)]
    pub theta: Option<f64>,
}

impl SolverSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            match self.solver {
                SolverKind::Dspdc => "dspdc",
                SolverKind::Spdc => "spdc",
                SolverKind::Sdca => "sdca",
            }
            .to_string()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckpointSpec {
    /// Only the initial point.
    None,
    Linear { every: u64 },
    Geometric { first: u64, factor: f64 },
    /// Explicit iterations, strictly increasing.
    List { at: Vec<u64> },
}

impl CheckpointSpec {
    pub fn schedule(&self, max_iters: u64) -> Result<Checkpoints> {
        Ok(match self {
            CheckpointSpec::None => Checkpoints::none(),
            CheckpointSpec::Linear { every } => Checkpoints::linear(*every, max_iters)?,
            CheckpointSpec::Geometric { first, factor } => Checkpoints::geometric(*first, *factor, max_iters)?,
            CheckpointSpec::List { at } => Checkpoints::new(at.clone())?,
        })
    }

    /// Parses `none`, `linear:EVERY`, `geometric:FIRST:FACTOR` or
    /// `list:T1,T2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("bad checkpoint schedule `{s}`"));
        let mut parts = s.split(':');
        let spec = match parts.next() {
            Some("none") => CheckpointSpec::None,
            Some("linear") => CheckpointSpec::Linear {
                every: parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            },
            Some("geometric") => CheckpointSpec::Geometric {
                first: parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?,
                factor: parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            },
            Some("list") => CheckpointSpec::List {
                at: parts
                    .next()
                    .ok_or_else(bad)?
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?,
            },
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(spec)
    }
}

fn default_true() -> bool {
    true
}

fn default_reference_budget() -> u64 {
    1_000_000
}

fn default_repetitions() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// Certify a reference and report distances to it.
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_reference_budget")]
    pub budget: u64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec {
            enabled: true,
            budget: default_reference_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub instance: InstanceSpec,
    pub solvers: Vec<SolverSpec>,
    pub max_iters: u64,
    /// Early stop at a checkpoint once the gap is at most this; 0 disables.
    #[serde(default)]
    pub gap_tolerance: f64,
    pub checkpoints: CheckpointSpec,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub reference: ReferenceSpec,
    /// Run repetitions on the rayon pool.
    #[serde(default = "default_true")]
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_err("experiment config"))
    }

    /// Reads a config; relative paths inside it are taken relative to the
    /// file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.instance.rebase(base);
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    /// Checks that do not need the problem.
    pub fn validate_shape(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(CliError::Config("no solvers listed".into()));
        }
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(CliError::Config("max_iters must be positive".into()));
        }
        if !(self.gap_tolerance >= 0.0) {
            return Err(CliError::Config("gap_tolerance must be nonnegative".into()));
        }
        let mut labels = BTreeSet::new();
        for s in &self.solvers {
            let label = s.label();
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(CliError::Config(format!("solver label `{label}` is not a safe file name")));
            }
            if !labels.insert(label.clone()) {
                return Err(CliError::Config(format!("duplicate solver label `{label}`")));
            }
        }
        self.checkpoints.schedule(self.max_iters)?;
        Ok(())
    }
}

fn default_seeds() -> u64 {
    50
}

fn default_verify_checkpoints() -> Vec<u64> {
    vec![100, 500, 2000]
}

fn default_slack() -> f64 {
    1.5
}

fn default_exact() -> LambdaPolicy {
    LambdaPolicy::Exact
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Distance, Mode::Gap]
}

fn default_one() -> usize {
    1
}

/// Settings for checking the convergence envelopes empirically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub instance: InstanceSpec,
    #[serde(default = "default_one")]
    pub q: usize,
    #[serde(default = "default_one")]
    pub m: usize,
    #[serde(default = "default_exact")]
    pub lambda: LambdaPolicy,
    /// Which envelopes to check.
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_verify_checkpoints")]
    pub checkpoints: Vec<u64>,
    /// The sample mean may exceed the envelope by this factor.
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub reference: ReferenceSpec,
}

impl VerifyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_err("verify config"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.instance.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "instance": {"generator": "synthetic", "n": 10, "p": 5, "l1": 0.001, "l2": 0.01, "seed": 3},
        "solvers": [{"solver": "dspdc", "q": 2, "m": 1}, {"solver": "sdca"}],
        "max_iters": 100,
        "checkpoints": {"kind": "linear", "every": 10},
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.repetitions, 1);
        assert!(c.reference.enabled);
        assert_eq!(c.solvers[0].lambda, LambdaPolicy::Auto);
        assert_eq!(c.solvers[1].label(), "sdca");
        c.validate_shape().unwrap();
        let g = c.instance.build().unwrap();
        assert_eq!(g.problem.n(), 10);
        assert!(matches!(g.problem.regularizer(), Regularizer::ElasticNet { .. }));
    }

    #[test]
    fn unknown_names_are_rejected() {
        let bad_gen = MINIMAL.replace("\"synthetic\"", "\"mystery\"");
        assert!(ExperimentConfig::from_json(&bad_gen).is_err());
        let bad_solver = MINIMAL.replace("\"sdca\"", "\"adam\"");
        assert!(ExperimentConfig::from_json(&bad_solver).is_err());
        let extra = MINIMAL.replace("\"max_iters\"", "\"max_iterz\": 1, \"max_iters\"");
        assert!(ExperimentConfig::from_json(&extra).is_err());
    }

    #[test]
    fn shape_validation() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.repetitions = 0;
        assert!(c.validate_shape().is_err());
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.solvers[1].label = Some("dspdc".into());
        assert!(c.validate_shape().is_err());
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.checkpoints = CheckpointSpec::List { at: vec![5, 5] };
        assert!(c.validate_shape().is_err());
    }

    #[test]
    fn checkpoint_strings() {
        assert_eq!(CheckpointSpec::parse("none").unwrap(), CheckpointSpec::None);
        assert_eq!(CheckpointSpec::parse("linear:50").unwrap(), CheckpointSpec::Linear { every: 50 });
        assert_eq!(
            CheckpointSpec::parse("geometric:10:1.5").unwrap(),
            CheckpointSpec::Geometric { first: 10, factor: 1.5 }
        );
        assert_eq!(
            CheckpointSpec::parse("list:1,5,9").unwrap(),
            CheckpointSpec::List { at: vec![1, 5, 9] }
        );
        for bad in ["", "linear", "linear:x", "geometric:1", "foo:1", "linear:1:2"] {
            assert!(CheckpointSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn hash_is_stable() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let b = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.max_iters = 101;
        assert_ne!(a.hash(), c.hash());
    }
}
