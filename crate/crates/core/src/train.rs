//! Mini-batch training with Adam and validation scoring.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::arch::{ArchError, Network};
use crate::data::SequenceDataset;
use crate::metrics::f1_and_accuracy;
use crate::nn::{softmax_cross_entropy, softmax_cross_entropy_grad, Adam, Ctx, Mode, NnError, Tensor};
use crate::rng::stream;
use crate::uq::elbo_loss;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset `{0}` is empty")]
    EmptyDataset(&'static str),
    #[error("dataset does not match the network input: {0}")]
    Incompatible(String),
    #[error("training diverged in epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl TrainOptions {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self { epochs, lr: 0.01, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean batch objective (cross-entropy, plus the weighted KL for variational nets).
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_weighted_f1: f64,
    /// Total KL divergence after the epoch; variational nets only.
    pub kl: Option<f64>,
}

/// Stacks the selected windows into `[n, channels, length]` with their labels.
pub fn batch_tensor(ds: &SequenceDataset, idx: &[usize]) -> Result<(Tensor, Vec<usize>)> {
    let per = ds.channels() * ds.window_length;
    let mut data = Vec::with_capacity(idx.len() * per);
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        data.extend_from_slice(&ds.windows[i].data);
        labels.push(ds.windows[i].label as usize);
    }
    Ok((Tensor::new(vec![idx.len(), ds.channels(), ds.window_length], data)?, labels))
}

pub fn dataset_tensor(ds: &SequenceDataset) -> Result<(Tensor, Vec<usize>)> {
    batch_tensor(ds, &(0..ds.len()).collect::<Vec<_>>())
}

fn check_compatible(net: &Network, ds: &SequenceDataset, name: &'static str) -> Result<()> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset(name));
    }
    if ds.channels() != net.input.channels || ds.window_length != net.input.length {
        return Err(TrainError::Incompatible(format!(
            "{name} windows are {}x{}, network expects {}x{}",
            ds.channels(),
            ds.window_length,
            net.input.channels,
            net.input.length
        )));
    }
    Ok(())
}

/// Deterministic validation: mean cross-entropy and weighted F1.
pub fn validate(net: &Network, ds: &SequenceDataset) -> Result<(f64, f64)> {
    check_compatible(net, ds, "validation")?;
    let (x, labels) = dataset_tensor(ds)?;
    let mut rng = stream(0, "validate", 0);
    let probs = net.predict_proba(&x, Mode::Infer, &mut rng)?;
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(labels.len());
    for (row, &y) in probs.data().chunks(2).zip(&labels) {
        loss -= row[y].max(f64::MIN_POSITIVE).ln();
        preds.push(u8::from(row[1] > row[0]));
    }
    let truth: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
    let f1 = f1_and_accuracy(&preds, &truth).map(|s| s.weighted_f1).unwrap_or(0.0);
    Ok((loss / labels.len() as f64, f1))
}

/// Trains `net` in place; `on_epoch` sees each epoch's record as it completes.
pub fn train(
    net: &mut Network,
    train_ds: &SequenceDataset,
    val_ds: &SequenceDataset,
    opts: &TrainOptions,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    check_compatible(net, train_ds, "training")?;
    check_compatible(net, val_ds, "validation")?;
    let batch = net.config.batch_size.max(1);
    // Batch normalization needs two rows; a trailing singleton is skipped.
    let batches = train_ds.len() / batch + usize::from(train_ds.len() % batch >= 2);
    if batches == 0 {
        return Err(TrainError::EmptyDataset("training"));
    }
    let kl_weight = 1.0 / batches as f64;
    let variational = net.has_variational_layers();
    let mut adam = Adam::with_lr(opts.lr);
    let mut history = Vec::with_capacity(opts.epochs);
    for epoch in 1..=opts.epochs {
        let diverged = |reason: String| TrainError::Diverged { epoch, reason };
        let mut order: Vec<usize> = (0..train_ds.len()).collect();
        order.shuffle(&mut stream(opts.seed, "shuffle", epoch as u64));
        let mut noise = stream(opts.seed, "train-noise", epoch as u64);
        let mut total = 0.0;
        for idx in order.chunks(batch).take(batches) {
            let (x, labels) = batch_tensor(train_ds, idx)?;
            net.zero_grad();
            let (logits, caches) =
                net.forward(&x, &mut Ctx { mode: Mode::Train, rng: &mut noise }).map_err(|e| diverged(e.to_string()))?;
            let (ce, probs) = softmax_cross_entropy(&logits, &labels)?;
            let mut loss = ce;
            if variational {
                loss = elbo_loss(ce, net.kl()?, kl_weight);
                net.add_kl_grad(kl_weight)?;
            }
            if !loss.is_finite() {
                return Err(diverged("non-finite loss".into()));
            }
            net.commit(&caches);
            net.backward(caches, &softmax_cross_entropy_grad(&probs, &labels))?;
            adam.begin_step();
            let mut err = None;
            net.visit_params_mut(&mut |_, p| {
                if let Err(e) = adam.update(p) {
                    err.get_or_insert(e);
                }
            });
            if let Some(e) = err {
                return Err(e.into());
            }
            total += loss;
        }
        let (val_loss, val_weighted_f1) = match validate(net, val_ds) {
            Ok(v) => v,
            Err(TrainError::Arch(ArchError::Nn(e))) => return Err(diverged(e.to_string())),
            Err(e) => return Err(e),
        };
        if !val_loss.is_finite() {
            return Err(diverged("non-finite validation loss".into()));
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / batches as f64,
            val_loss,
            val_weighted_f1,
            kl: if variational { Some(net.kl()?) } else { None },
        };
        on_epoch(&record);
        history.push(record);
    }
    Ok(history)
}
