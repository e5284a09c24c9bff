//! Minimal layer engine: forward and backward passes for the layers the
//! terrain classifiers use, Adam, and finite-difference gradient checks.
//!
//! Layers take `&self` on the forward pass and return a cache; the backward
//! pass consumes that cache and accumulates parameter gradients. A frozen
//! network can therefore serve concurrent inference, while training stays
//! single-writer.

mod activation;
mod adam;
mod batchnorm;
mod conv;
mod dense;
pub(crate) mod gemm;
pub mod gradcheck;
mod layer;
mod loss;
mod lstm;
mod param;
mod pool;
mod residual;
mod tensor;

use thiserror::Error;

pub use activation::{relu_backward, relu_forward};
pub use adam::{adam_step, Adam};
pub use batchnorm::{BatchNorm1d, BatchNormCache};
pub use conv::{conv1d_backward, conv1d_forward, Conv1d, Padding};
pub use dense::{dense_backward, dense_forward, Dense};
pub use gradcheck::{check_layer, grad_check, LayerSpec};
pub use layer::{Cache, Layer};
pub use loss::{softmax, softmax_cross_entropy, softmax_cross_entropy_grad};
pub use lstm::{Lstm, LstmCache};
pub use param::Param;
pub use pool::{global_avg_pool, global_avg_pool_backward, MaxPool1d};
pub use residual::Residual;
pub use tensor::Tensor;

use crate::rng::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    ShapeMismatch { op: &'static str, expected: Vec<usize>, got: Vec<usize> },
    #[error("kernel {kernel} exceeds padded length {padded}")]
    KernelTooLarge { kernel: usize, padded: usize },
    #[error("batch normalization in training mode needs batch >= 2, got {0}")]
    BatchTooSmall(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("invalid layer state: {0}")]
    InvalidState(String),
    #[error("cache does not belong to layer `{0}`")]
    CacheMismatch(&'static str),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

/// How stochastic and normalization layers behave on a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; dropout masks and weight noise active.
    Train,
    /// Running statistics; all stochastic layers off.
    Infer,
    /// Running statistics; stochastic layers active (Monte Carlo sampling).
    McInfer,
}

impl Mode {
    pub fn stochastic(self) -> bool {
        matches!(self, Self::Train | Self::McInfer)
    }
}

pub struct Ctx<'a> {
    pub mode: Mode,
    pub rng: &'a mut Rng,
}
