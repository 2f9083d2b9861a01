//! Losses, regularizers and their proximal steps.

pub mod eigen;
mod loss;
pub mod psd;
mod regularizer;

pub use loss::{LossKind, SmoothLoss, LOGISTIC_MAX_ITERS, LOGISTIC_TOLERANCE};
pub use psd::{project_psd, psd_prox};
pub use regularizer::Regularizer;
