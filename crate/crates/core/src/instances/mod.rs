//! Problem generators: the synthetic classification data, feature- and
//! instance-reduced factorized data, multiple-matrix risk minimization and the
//! adversarial lower-bound instance.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::metrics::ReferenceSolution;
use crate::problem::Problem;

mod factorized;
mod lower_bound;
mod matrix_risk;
mod synthetic;

pub use factorized::{
    feature_reduction, gen_factorized, gen_instance_reduction, gen_synthetic_factorized,
    instance_reduction,
};
pub use lower_bound::{gen_lower_bound, LowerBoundInstance};
pub use matrix_risk::gen_matrix_risk;
pub use synthetic::{gen_synthetic, synthetic_beta, SYNTHETIC_SUPPORT};

/// Where a problem came from. Generators are pure in `(params, seed)`, so this
/// is enough to rebuild the problem.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
    /// Input file for parsed datasets.
    #[cfg_attr(feature = "serde", serde(default))]
    pub source: Option<String>,
}

impl Provenance {
    pub fn new(generator: &str, seed: u64) -> Self {
        Provenance {
            generator: generator.to_string(),
            seed,
            params: BTreeMap::new(),
            source: None,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// A problem together with its labels, provenance and, when known, its exact
/// saddle point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GeneratedProblem {
    pub problem: Problem,
    pub labels: Vec<f64>,
    pub provenance: Provenance,
    #[cfg_attr(feature = "serde", serde(default))]
    pub closed_form: Option<ReferenceSolution>,
}

pub(crate) fn generator_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
