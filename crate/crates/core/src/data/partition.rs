use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::DataMatrix;
use crate::error::{invalid, Result};

/// Splits the primal vector into `p` blocks and the dual vector into `n` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "PartitionRepr", into = "PartitionRepr"))]
pub struct BlockPartition {
    primal_sizes: Vec<usize>,
    dual_sizes: Vec<usize>,
    primal_offsets: Vec<usize>,
    dual_offsets: Vec<usize>,
}

#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[allow(dead_code)]
struct PartitionRepr {
    primal_sizes: Vec<usize>,
    dual_sizes: Vec<usize>,
}

impl From<BlockPartition> for PartitionRepr {
    fn from(b: BlockPartition) -> Self {
        PartitionRepr {
            primal_sizes: b.primal_sizes,
            dual_sizes: b.dual_sizes,
        }
    }
}

impl TryFrom<PartitionRepr> for BlockPartition {
    type Error = crate::Error;
    fn try_from(r: PartitionRepr) -> Result<Self> {
        BlockPartition::new(r.primal_sizes, r.dual_sizes)
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

impl BlockPartition {
    pub fn new(primal_sizes: Vec<usize>, dual_sizes: Vec<usize>) -> Result<Self> {
        if primal_sizes.is_empty() || dual_sizes.is_empty() {
            return Err(invalid("partition needs at least one primal and one dual block"));
        }
        if primal_sizes.contains(&0) || dual_sizes.contains(&0) {
            return Err(invalid("block sizes must be positive"));
        }
        let primal_offsets = offsets(&primal_sizes);
        let dual_offsets = offsets(&dual_sizes);
        Ok(BlockPartition {
            primal_sizes,
            dual_sizes,
            primal_offsets,
            dual_offsets,
        })
    }

    /// All blocks of size one: `n` dual and `p` primal coordinates.
    pub fn scalar(n: usize, p: usize) -> Self {
        BlockPartition::new(vec![1; p], vec![1; n]).expect("positive dimensions")
    }

    /// Equal-size blocks.
    pub fn uniform(n_blocks: usize, dual_size: usize, p_blocks: usize, primal_size: usize) -> Result<Self> {
        BlockPartition::new(vec![primal_size; p_blocks], vec![dual_size; n_blocks])
    }

    pub fn is_scalar(&self) -> bool {
        self.primal_is_scalar() && self.dual_is_scalar()
    }

    pub fn primal_is_scalar(&self) -> bool {
        self.primal_sizes.iter().all(|&s| s == 1)
    }

    pub fn dual_is_scalar(&self) -> bool {
        self.dual_sizes.iter().all(|&s| s == 1)
    }

    /// Number of primal blocks.
    pub fn p(&self) -> usize {
        self.primal_sizes.len()
    }

    /// Number of dual blocks.
    pub fn n(&self) -> usize {
        self.dual_sizes.len()
    }

    /// Total primal dimension.
    pub fn primal_dim(&self) -> usize {
        *self.primal_offsets.last().unwrap()
    }

    /// Total dual dimension.
    pub fn dual_dim(&self) -> usize {
        *self.dual_offsets.last().unwrap()
    }

    pub fn primal_sizes(&self) -> &[usize] {
        &self.primal_sizes
    }

    pub fn dual_sizes(&self) -> &[usize] {
        &self.dual_sizes
    }

    pub fn primal_offsets(&self) -> &[usize] {
        &self.primal_offsets[..self.p()]
    }

    pub fn dual_offsets(&self) -> &[usize] {
        &self.dual_offsets[..self.n()]
    }

    #[inline]
    pub fn primal_range(&self, j: usize) -> Range<usize> {
        self.primal_offsets[j]..self.primal_offsets[j + 1]
    }

    #[inline]
    pub fn dual_range(&self, i: usize) -> Range<usize> {
        self.dual_offsets[i]..self.dual_offsets[i + 1]
    }

    pub fn block_ranges(&self, i: usize, j: usize) -> Result<(Range<usize>, Range<usize>)> {
        if i >= self.n() || j >= self.p() {
            return Err(invalid(format!(
                "block ({i}, {j}) out of range for {}x{} blocks",
                self.n(),
                self.p()
            )));
        }
        Ok((self.dual_range(i), self.primal_range(j)))
    }

    pub fn check_matrix(&self, a: &DataMatrix) -> Result<()> {
        if a.rows() != self.dual_dim() || a.cols() != self.primal_dim() {
            return Err(invalid(format!(
                "partition covers {}x{} but the matrix is {}x{}",
                self.dual_dim(),
                self.primal_dim(),
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }
}
