//! Doubly stochastic primal-dual coordinate (DSPDC) solvers for strongly convex
//! bilinear saddle-point problems arising from regularized empirical risk
//! minimization:
//!
//! ```text
//! min_x max_y  g(x) + (1/n) yᵀ A x − (1/n) Σᵢ φᵢ*(yᵢ)
//! ```
//!
//! Each iteration samples `m` dual and `q` primal coordinate blocks, updates them
//! with closed-form (or eigendecomposition-based) proximal steps and extrapolates
//! both sides. The crate also carries the SPDC and SDCA baselines, the
//! factorized-data implementation (`A = UV`), the block variant with PSD matrix
//! blocks, problem generators and objective/gap metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! runner and the command line live in the companion `dspdc` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod instances;
pub(crate) mod math;
pub mod metrics;
pub mod problem;
pub mod proximal;
pub mod solvers;

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use data::{
    BlockPartition, DataMatrix, DenseMatrix, FactorizedMatrix, IndexSample, LambdaPolicy,
    SparseMatrix, SubsetSampler,
};
pub use error::{Error, Result};
pub use instances::{GeneratedProblem, LowerBoundInstance, Provenance};
pub use metrics::{ReferenceSolution, ReferenceSource};
pub use problem::Problem;
pub use proximal::{LossKind, Regularizer, SmoothLoss};
pub use solvers::{
    Checkpoints, Clock, IterateState, Maintained, Mode, RunOptions, RunOutput, RunSettings,
    SolverParams, SolverStats, TraceRecord,
};
