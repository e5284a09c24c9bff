//! Uncertainty layers: MC Dropout, DropConnect (dense and conv), and a
//! Flipout dense head trained with the Gaussian KL term of the ELBO.

mod dropconnect;
mod dropout;
mod flipout;
mod kl;

use thiserror::Error;

pub use dropconnect::{dropconnect_forward, DropConnectConv, DropConnectDense, WeightMask};
pub use dropout::{apply_mask, mc_dropout_forward, sample_mask, Dropout};
pub use flipout::{FlipoutCache, FlipoutDense, FLIPOUT_INIT_SIGMA};
pub use kl::{elbo_loss, gaussian_kl, softplus};

use crate::nn::NnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UqError {
    #[error("rate {0} outside [0, 1)")]
    InvalidRate(f64),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("mean and sigma lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = UqError> = std::result::Result<T, E>;

pub(crate) fn check_rate(p: f64) -> Result<f64> {
    if (0.0..1.0).contains(&p) {
        Ok(p)
    } else {
        Err(UqError::InvalidRate(p))
    }
}
