use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Sorted, distinct indices drawn from `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSample {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSample {
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("sample indices must be distinct"));
        }
        if indices.last().is_some_and(|&k| k >= universe) {
            return Err(invalid(format!("sample index outside 0..{universe}")));
        }
        Ok(IndexSample { indices, universe })
    }

    pub fn full(universe: usize) -> Self {
        IndexSample {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check_size(universe: usize, size: usize) -> Result<()> {
    if size == 0 || size > universe {
        return Err(invalid(format!(
            "sample size must be in 1..={universe}, got {size}"
        )));
    }
    Ok(())
}

/// Draws a uniformly random `size`-subset of `0..universe`.
pub fn sample_subset<R: Rng + ?Sized>(rng: &mut R, universe: usize, size: usize) -> Result<IndexSample> {
    let mut s = SubsetSampler::new(universe, size)?;
    let indices = s.draw(rng).to_vec();
    Ok(IndexSample { indices, universe })
}

/// Reusable sampler that keeps its permutation buffer between draws, so each
/// draw costs `O(size log size)` instead of `O(universe)`.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    perm: Vec<usize>,
    size: usize,
    out: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(universe: usize, size: usize) -> Result<Self> {
        check_size(universe, size)?;
        Ok(SubsetSampler {
            perm: (0..universe).collect(),
            size,
            out: Vec::with_capacity(size),
        })
    }

    pub fn universe(&self) -> usize {
        self.perm.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Returns the next sample in increasing order. The full set is returned
    /// without touching the generator.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[usize] {
        self.out.clear();
        if self.size == self.perm.len() {
            self.out.extend(0..self.size);
        } else {
            let (chosen, _) = self.perm.partial_shuffle(rng, self.size);
            self.out.extend_from_slice(chosen);
            self.out.sort_unstable();
        }
        &self.out
    }
}

/// The per-run generator used by every solver.
pub fn solver_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
