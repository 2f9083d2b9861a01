//! Design matrices, block partitions, subset sampling and the scale constant.

mod matrix;
mod partition;
mod sample;
pub mod scale;

pub use matrix::{DataMatrix, DenseMatrix, FactorizedMatrix, SparseMatrix, DENSE_ENTRY_CAP};
pub use partition::BlockPartition;
pub use sample::{sample_subset, solver_rng, IndexSample, SubsetSampler};
pub use scale::{
    matrix_norm_sq, scale_constant_closed_form, scale_constant_exact, scale_constant_exact_capped,
    scale_constant_heuristic, scale_constant_heuristic_blocks, scale_constant_upper_bound,
    spectral_norm_sq, subset_pair_count, LambdaPolicy, ENUMERATION_CAP,
};
