use super::{Mode, NnError, Param, Result, Tensor};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel normalization over batch and time for `[batch, ch, len]`
/// or `[batch, ch]` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm1d {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    /// Batch statistics, present only for training-mode passes.
    batch_stats: Option<(Vec<f64>, Vec<f64>)>,
    shape: Vec<usize>,
}

fn layout(x: &Tensor) -> Result<(usize, usize, usize)> {
    match x.shape() {
        &[b, c] => Ok((b, c, 1)),
        &[b, c, l] => Ok((b, c, l)),
        s => Err(NnError::ShapeMismatch { op: "batchnorm", expected: vec![0, 0, 0], got: s.to_vec() }),
    }
}

impl BatchNorm1d {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Param::filled(&[channels], 1.0),
            beta: Param::zeros(&[channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<(Tensor, BatchNormCache)> {
        let (b, c, l) = layout(x)?;
        if c != self.channels() {
            return Err(NnError::ShapeMismatch { op: "batchnorm", expected: vec![self.channels()], got: vec![c] });
        }
        let xs = x.data();
        let at = |n: usize, ch: usize| &xs[(n * c + ch) * l..(n * c + ch + 1) * l];
        let (mean, var, batch_stats) = if mode == Mode::Train {
            if b < 2 {
                return Err(NnError::BatchTooSmall(b));
            }
            let count = (b * l) as f64;
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            for ch in 0..c {
                let m = (0..b).flat_map(|n| at(n, ch)).sum::<f64>() / count;
                mean[ch] = m;
                var[ch] = (0..b).flat_map(|n| at(n, ch)).map(|v| (v - m) * (v - m)).sum::<f64>() / count;
            }
            (mean.clone(), var.clone(), Some((mean, var)))
        } else {
            (self.running_mean.clone(), self.running_var.clone(), None)
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = vec![0.0; xs.len()];
        let mut y = vec![0.0; xs.len()];
        for n in 0..b {
            for ch in 0..c {
                let base = (n * c + ch) * l;
                for t in 0..l {
                    let h = (xs[base + t] - mean[ch]) * inv_std[ch];
                    xhat[base + t] = h;
                    y[base + t] = self.gamma.value[ch] * h + self.beta.value[ch];
                }
            }
        }
        let cache = BatchNormCache { xhat, inv_std, batch_stats, shape: x.shape().to_vec() };
        Ok((Tensor::new(x.shape().to_vec(), y)?, cache))
    }

    pub fn backward(&mut self, cache: &BatchNormCache, g: &Tensor) -> Result<Tensor> {
        if g.shape() != cache.shape.as_slice() {
            return Err(NnError::ShapeMismatch { op: "batchnorm backward", expected: cache.shape.clone(), got: g.shape().to_vec() });
        }
        let (b, c, l) = layout(g)?;
        let gs = g.data();
        let count = (b * l) as f64;
        let mut dx = vec![0.0; gs.len()];
        for ch in 0..c {
            let idx = |n: usize, t: usize| (n * c + ch) * l + t;
            let (mut sum_g, mut sum_gx) = (0.0, 0.0);
            for n in 0..b {
                for t in 0..l {
                    sum_g += gs[idx(n, t)];
                    sum_gx += gs[idx(n, t)] * cache.xhat[idx(n, t)];
                }
            }
            self.gamma.grad[ch] += sum_gx;
            self.beta.grad[ch] += sum_g;
            let scale = self.gamma.value[ch] * cache.inv_std[ch];
            for n in 0..b {
                for t in 0..l {
                    let i = idx(n, t);
                    dx[i] = if cache.batch_stats.is_some() {
                        scale * (gs[i] - sum_g / count - cache.xhat[i] * sum_gx / count)
                    } else {
                        scale * gs[i]
                    };
                }
            }
        }
        Tensor::new(cache.shape.clone(), dx)
    }

    /// Folds the batch statistics of a training pass into the running stats.
    pub fn commit(&mut self, cache: &BatchNormCache) {
        if let Some((mean, var)) = &cache.batch_stats {
            for ch in 0..self.channels() {
                self.running_mean[ch] = BN_MOMENTUM * self.running_mean[ch] + (1.0 - BN_MOMENTUM) * mean[ch];
                self.running_var[ch] = BN_MOMENTUM * self.running_var[ch] + (1.0 - BN_MOMENTUM) * var[ch];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_batch_closed_form() {
        let bn = BatchNorm1d::new(1);
        let x = Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap();
        let (y, cache) = bn.forward(&x, Mode::Train).unwrap();
        let s = (1.0f64 + 1e-5).powf(-0.5);
        assert!((y.data()[0] + s).abs() < 1e-15 && (y.data()[1] - s).abs() < 1e-15);
        let mut bn = bn;
        bn.commit(&cache);
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-15);
        assert!((bn.running_var[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standardized_batch_passes_through() {
        let bn = BatchNorm1d::new(1);
        let x = Tensor::new(vec![4, 1, 1], vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-5);
        }
        let (y, _) = bn.forward(&x, Mode::Infer).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn train_needs_two_rows() {
        let bn = BatchNorm1d::new(2);
        let x = Tensor::zeros(&[1, 2, 3]);
        assert_eq!(bn.forward(&x, Mode::Train).unwrap_err(), NnError::BatchTooSmall(1));
        assert!(bn.forward(&x, Mode::Infer).is_ok());
    }
}
