use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::{BlockPartition, DataMatrix};
use crate::error::{invalid, Result};
use crate::proximal::{Regularizer, SmoothLoss};

/// `min_x max_y g(x) + yᵀAx/n − Σ φ_k*(y_k)/n`, with `n` the number of dual
/// blocks. One loss per dual coordinate; the regularizer applies to every
/// primal block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "ProblemRepr", into = "ProblemRepr"))]
pub struct Problem {
    matrix: DataMatrix,
    losses: Vec<SmoothLoss>,
    regularizer: Regularizer,
    partition: BlockPartition,
}

#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[allow(dead_code)]
struct ProblemRepr {
    matrix: DataMatrix,
    losses: Vec<SmoothLoss>,
    regularizer: Regularizer,
    partition: BlockPartition,
}

impl From<Problem> for ProblemRepr {
    fn from(p: Problem) -> Self {
        ProblemRepr {
            matrix: p.matrix,
            losses: p.losses,
            regularizer: p.regularizer,
            partition: p.partition,
        }
    }
}

impl TryFrom<ProblemRepr> for Problem {
    type Error = crate::Error;
    fn try_from(r: ProblemRepr) -> Result<Self> {
        Problem::new(r.matrix, r.losses, r.regularizer, r.partition)
    }
}

impl Problem {
    pub fn new(
        matrix: DataMatrix,
        losses: Vec<SmoothLoss>,
        regularizer: Regularizer,
        partition: BlockPartition,
    ) -> Result<Self> {
        partition.check_matrix(&matrix)?;
        regularizer.validate()?;
        if losses.len() != partition.dual_dim() {
            return Err(invalid(format!(
                "{} losses for {} dual coordinates",
                losses.len(),
                partition.dual_dim()
            )));
        }
        let bs = regularizer.block_size();
        if regularizer.is_psd() && partition.primal_sizes().iter().any(|&s| s != bs) {
            return Err(invalid(format!(
                "PSD regularizer needs primal blocks of size {bs}"
            )));
        }
        Ok(Problem {
            matrix,
            losses,
            regularizer,
            partition,
        })
    }

    /// Scalar coordinates on both sides.
    pub fn scalar(matrix: DataMatrix, losses: Vec<SmoothLoss>, regularizer: Regularizer) -> Result<Self> {
        let partition = BlockPartition::scalar(matrix.rows(), matrix.cols());
        Self::new(matrix, losses, regularizer, partition)
    }

    pub fn matrix(&self) -> &DataMatrix {
        &self.matrix
    }

    pub fn losses(&self) -> &[SmoothLoss] {
        &self.losses
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    /// Number of dual blocks.
    pub fn n(&self) -> usize {
        self.partition.n()
    }

    /// Number of primal blocks.
    pub fn p(&self) -> usize {
        self.partition.p()
    }

    pub fn primal_dim(&self) -> usize {
        self.partition.primal_dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.partition.dual_dim()
    }

    /// Strong-convexity modulus of `g`.
    pub fn lambda(&self) -> f64 {
        self.regularizer.modulus()
    }

    /// Strong-convexity modulus shared by all `φ_k*`.
    pub fn gamma(&self) -> f64 {
        self.losses.iter().map(|l| l.gamma()).fold(f64::INFINITY, f64::min)
    }

    /// Same problem with another matrix of identical shape.
    pub fn with_matrix(&self, matrix: DataMatrix) -> Result<Self> {
        Self::new(matrix, self.losses.clone(), self.regularizer, self.partition.clone())
    }

    pub fn with_regularizer(&self, regularizer: Regularizer) -> Result<Self> {
        Self::new(self.matrix.clone(), self.losses.clone(), regularizer, self.partition.clone())
    }
}
