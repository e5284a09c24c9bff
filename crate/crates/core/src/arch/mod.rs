//! Network construction: configs, the CNN / LSTM / CNN-LSTM / FCN / ResNet
//! builders, uncertainty-layer placement and checkpoints.

mod build;
mod checkpoint;
mod config;
mod network;
mod placement;

use std::path::PathBuf;

use thiserror::Error;

pub use build::{build, build_cnn, build_cnn_lstm, build_fcn, build_lstm, build_resnet, residual_block, FIXED_FILTERS, FIXED_KERNELS};
pub use checkpoint::{load_checkpoint, parse_checkpoint, render_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use config::{ranges, Family, InputShape, ModelConfig, UqMethod, CONFIG_KEYS, FIXED_DROPOUT_RATE};
pub use network::Network;
pub use placement::{apply_uq, strip_uq};

use crate::kv::KvError;
use crate::nn::NnError;
use crate::uq::UqError;

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("pooling in block {block} reduces the sequence length to 0")]
    ShapeCollapse { block: usize },
    #[error("network already carries uncertainty layers ({0})")]
    AlreadyWrapped(UqMethod),
    #[error("{uq} is not defined for {family}")]
    UnsupportedCombination { family: Family, uq: UqMethod },
    #[error("input shape mismatch: network expects {expected:?}, got {got:?}")]
    InputMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Uq(#[from] UqError),
    #[error(transparent)]
    Kv(#[from] KvError),
}

pub type Result<T, E = ArchError> = std::result::Result<T, E>;
