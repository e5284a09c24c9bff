use super::batchnorm::BatchNormCache;
use super::lstm::LstmCache;
use super::residual::ResidualCache;
use super::{
    global_avg_pool, global_avg_pool_backward, relu_backward, relu_forward, BatchNorm1d, Conv1d, Ctx, Dense, Lstm,
    MaxPool1d, NnError, Param, Residual, Result, Tensor,
};
use crate::uq::{mc_dropout_forward, DropConnectConv, DropConnectDense, Dropout, FlipoutCache, FlipoutDense, UqError};

/// Every layer a terrain classifier can contain.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv(Conv1d),
    BatchNorm(BatchNorm1d),
    Relu,
    MaxPool(MaxPool1d),
    GlobalAvgPool,
    Lstm(Lstm),
    /// `[batch, ch, len] -> [batch, len, ch]`, feeding conv features to an LSTM.
    ToSequence,
    Dropout(Dropout),
    DropConnectDense(DropConnectDense),
    DropConnectConv(DropConnectConv),
    Flipout(FlipoutDense),
    Residual(Box<Residual>),
}

#[derive(Debug, Clone)]
pub enum Cache {
    Input(Tensor),
    Masked { x: Tensor, mask: Option<Vec<f64>> },
    BatchNorm(BatchNormCache),
    Relu(Tensor),
    MaxPool { shape: Vec<usize>, argmax: Vec<usize> },
    Shape(Vec<usize>),
    Lstm(LstmCache),
    Dropout(Option<Vec<f64>>),
    Flipout(FlipoutCache),
    Residual(ResidualCache),
}

fn uq(e: UqError) -> NnError {
    match e {
        UqError::Nn(e) => e,
        other => NnError::InvalidState(other.to_string()),
    }
}

fn transpose12(x: &Tensor, op: &'static str) -> Result<Tensor> {
    let (b, m, n) = x.dims3(op)?;
    let src = x.data();
    let mut y = vec![0.0; src.len()];
    for s in 0..b {
        for i in 0..m {
            for j in 0..n {
                y[(s * n + j) * m + i] = src[(s * m + i) * n + j];
            }
        }
    }
    Tensor::new(vec![b, n, m], y)
}

fn mismatch(name: &'static str) -> NnError {
    NnError::CacheMismatch(name)
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dense(_) => "dense",
            Self::Conv(_) => "conv1d",
            Self::BatchNorm(_) => "batchnorm1d",
            Self::Relu => "relu",
            Self::MaxPool(_) => "maxpool1d",
            Self::GlobalAvgPool => "globalavgpool",
            Self::Lstm(_) => "lstm",
            Self::ToSequence => "to_sequence",
            Self::Dropout(_) => "dropout",
            Self::DropConnectDense(_) => "dropconnect_dense",
            Self::DropConnectConv(_) => "dropconnect_conv1d",
            Self::Flipout(_) => "flipout_dense",
            Self::Residual(_) => "residual",
        }
    }

    pub fn forward(&self, x: &Tensor, ctx: &mut Ctx) -> Result<(Tensor, Cache)> {
        let (y, cache) = match self {
            Self::Dense(d) => (d.forward(x)?, Cache::Input(x.clone())),
            Self::Conv(c) => (c.forward(x)?, Cache::Input(x.clone())),
            Self::BatchNorm(bn) => {
                let (y, c) = bn.forward(x, ctx.mode)?;
                (y, Cache::BatchNorm(c))
            }
            Self::Relu => {
                let y = relu_forward(x);
                (y.clone(), Cache::Relu(y))
            }
            Self::MaxPool(p) => {
                let (y, argmax) = p.forward(x)?;
                (y, Cache::MaxPool { shape: x.shape().to_vec(), argmax })
            }
            Self::GlobalAvgPool => (global_avg_pool(x)?, Cache::Shape(x.shape().to_vec())),
            Self::Lstm(l) => {
                let (y, c) = l.forward(x)?;
                (y, Cache::Lstm(c))
            }
            Self::ToSequence => (transpose12(x, "to_sequence")?, Cache::Shape(x.shape().to_vec())),
            Self::Dropout(d) => {
                let (y, mask) = mc_dropout_forward(x, d.rate(), ctx.mode, ctx.rng).map_err(uq)?;
                (y, Cache::Dropout(mask))
            }
            Self::DropConnectDense(d) => {
                let (y, mask) = d.forward(x, ctx.mode, ctx.rng).map_err(uq)?;
                (y, Cache::Masked { x: x.clone(), mask })
            }
            Self::DropConnectConv(d) => {
                let (y, mask) = d.forward(x, ctx.mode, ctx.rng).map_err(uq)?;
                (y, Cache::Masked { x: x.clone(), mask })
            }
            Self::Flipout(f) => {
                let (y, c) = f.forward(x, ctx.mode, ctx.rng).map_err(uq)?;
                (y, Cache::Flipout(c))
            }
            Self::Residual(r) => {
                let (y, c) = r.forward(x, ctx)?;
                (y, Cache::Residual(c))
            }
        };
        if !y.is_finite() {
            return Err(NnError::NonFinite(self.name()));
        }
        Ok((y, cache))
    }

    /// Accumulates parameter gradients and returns the gradient of the input.
    pub fn backward(&mut self, cache: Cache, g: &Tensor) -> Result<Tensor> {
        let name = self.name();
        match (self, cache) {
            (Self::Dense(d), Cache::Input(x)) => d.backward(&x, g),
            (Self::Conv(c), Cache::Input(x)) => c.backward(&x, g),
            (Self::BatchNorm(bn), Cache::BatchNorm(c)) => bn.backward(&c, g),
            (Self::Relu, Cache::Relu(y)) => relu_backward(&y, g),
            (Self::MaxPool(_), Cache::MaxPool { shape, argmax }) => MaxPool1d::backward(&shape, &argmax, g),
            (Self::GlobalAvgPool, Cache::Shape(shape)) => global_avg_pool_backward(&shape, g),
            (Self::Lstm(l), Cache::Lstm(c)) => l.backward(&c, g),
            (Self::ToSequence, Cache::Shape(_)) => transpose12(g, "to_sequence backward"),
            (Self::Dropout(_), Cache::Dropout(mask)) => {
                let mut dx = g.clone();
                if let Some(mask) = mask {
                    dx.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                }
                Ok(dx)
            }
            (Self::DropConnectDense(d), Cache::Masked { x, mask }) => d.backward(&x, mask.as_deref(), g).map_err(uq),
            (Self::DropConnectConv(d), Cache::Masked { x, mask }) => d.backward(&x, mask.as_deref(), g).map_err(uq),
            (Self::Flipout(f), Cache::Flipout(c)) => f.backward(&c, g).map_err(uq),
            (Self::Residual(r), Cache::Residual(c)) => r.backward(c, g),
            _ => Err(mismatch(name)),
        }
    }

    /// Folds training-pass batch statistics into running statistics.
    pub fn commit(&mut self, cache: &Cache) {
        match (self, cache) {
            (Self::BatchNorm(bn), Cache::BatchNorm(c)) => bn.commit(c),
            (Self::Residual(r), Cache::Residual(c)) => r.commit(c),
            _ => {}
        }
    }

    /// Visits trainable parameters with their names relative to `prefix`.
    pub fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        let mut named = |n: &str, p: &Param| f(format!("{prefix}{n}"), p);
        match self {
            Self::Dense(d) | Self::DropConnectDense(DropConnectDense { inner: d, .. }) => {
                named("weight", &d.weight);
                named("bias", &d.bias);
            }
            Self::Conv(c) | Self::DropConnectConv(DropConnectConv { inner: c, .. }) => {
                named("weight", &c.weight);
                named("bias", &c.bias);
            }
            Self::BatchNorm(bn) => {
                named("gamma", &bn.gamma);
                named("beta", &bn.beta);
            }
            Self::Lstm(l) => {
                named("w_x", &l.w_x);
                named("w_h", &l.w_h);
                named("bias", &l.bias);
            }
            Self::Flipout(fo) => {
                named("mu", &fo.mu);
                named("rho", &fo.rho);
                named("bias_mu", &fo.bias_mu);
                named("bias_rho", &fo.bias_rho);
            }
            Self::Residual(r) => {
                for (i, l) in r.body.iter().enumerate() {
                    l.visit_params(&format!("{prefix}body.{i}."), f);
                }
                for (i, l) in r.shortcut.iter().enumerate() {
                    l.visit_params(&format!("{prefix}shortcut.{i}."), f);
                }
            }
            Self::Relu | Self::MaxPool(_) | Self::GlobalAvgPool | Self::ToSequence | Self::Dropout(_) => {}
        }
    }

    pub fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        let mut named = |n: &str, p: &mut Param| f(format!("{prefix}{n}"), p);
        match self {
            Self::Dense(d) | Self::DropConnectDense(DropConnectDense { inner: d, .. }) => {
                named("weight", &mut d.weight);
                named("bias", &mut d.bias);
            }
            Self::Conv(c) | Self::DropConnectConv(DropConnectConv { inner: c, .. }) => {
                named("weight", &mut c.weight);
                named("bias", &mut c.bias);
            }
            Self::BatchNorm(bn) => {
                named("gamma", &mut bn.gamma);
                named("beta", &mut bn.beta);
            }
            Self::Lstm(l) => {
                named("w_x", &mut l.w_x);
                named("w_h", &mut l.w_h);
                named("bias", &mut l.bias);
            }
            Self::Flipout(fo) => {
                named("mu", &mut fo.mu);
                named("rho", &mut fo.rho);
                named("bias_mu", &mut fo.bias_mu);
                named("bias_rho", &mut fo.bias_rho);
            }
            Self::Residual(r) => {
                for (i, l) in r.body.iter_mut().enumerate() {
                    l.visit_params_mut(&format!("{prefix}body.{i}."), f);
                }
                for (i, l) in r.shortcut.iter_mut().enumerate() {
                    l.visit_params_mut(&format!("{prefix}shortcut.{i}."), f);
                }
            }
            Self::Relu | Self::MaxPool(_) | Self::GlobalAvgPool | Self::ToSequence | Self::Dropout(_) => {}
        }
    }

    /// Visits non-trainable state (batch-norm running statistics).
    pub fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(String, &[f64])) {
        match self {
            Self::BatchNorm(bn) => {
                f(format!("{prefix}running_mean"), &bn.running_mean);
                f(format!("{prefix}running_var"), &bn.running_var);
            }
            Self::Residual(r) => {
                for (i, l) in r.body.iter().enumerate() {
                    l.visit_buffers(&format!("{prefix}body.{i}."), f);
                }
                for (i, l) in r.shortcut.iter().enumerate() {
                    l.visit_buffers(&format!("{prefix}shortcut.{i}."), f);
                }
            }
            _ => {}
        }
    }

    pub fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Vec<f64>)) {
        match self {
            Self::BatchNorm(bn) => {
                f(format!("{prefix}running_mean"), &mut bn.running_mean);
                f(format!("{prefix}running_var"), &mut bn.running_var);
            }
            Self::Residual(r) => {
                for (i, l) in r.body.iter_mut().enumerate() {
                    l.visit_buffers_mut(&format!("{prefix}body.{i}."), f);
                }
                for (i, l) in r.shortcut.iter_mut().enumerate() {
                    l.visit_buffers_mut(&format!("{prefix}shortcut.{i}."), f);
                }
            }
            _ => {}
        }
    }

    /// KL term of variational layers (zero for the rest).
    pub fn kl(&self) -> Result<f64> {
        match self {
            Self::Flipout(f) => f.kl().map_err(uq),
            _ => Ok(0.0),
        }
    }

    pub fn add_kl_grad(&mut self, weight: f64) -> Result<()> {
        match self {
            Self::Flipout(f) => f.add_kl_grad(weight).map_err(uq),
            _ => Ok(()),
        }
    }

    /// Output shape for one sample given its input shape (batch axis omitted).
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let bad = |expected: Vec<usize>| NnError::ShapeMismatch { op: self.name(), expected, got: input.to_vec() };
        match (self, input) {
            (Self::Dense(d) | Self::DropConnectDense(DropConnectDense { inner: d, .. }), &[n]) if n == d.in_features() => {
                Ok(vec![d.out_features()])
            }
            (Self::Flipout(f), &[n]) if n == f.in_features() => Ok(vec![f.out_features()]),
            (Self::Conv(c) | Self::DropConnectConv(DropConnectConv { inner: c, .. }), &[ch, len]) if ch == c.in_channels() => {
                Ok(vec![c.filters(), c.padding.out_len(len, c.kernel())?])
            }
            (Self::BatchNorm(bn), &[ch, ..]) if ch == bn.channels() && input.len() <= 2 => Ok(input.to_vec()),
            (Self::Relu | Self::Dropout(_), _) => Ok(input.to_vec()),
            (Self::MaxPool(p), &[ch, len]) => match p.out_len(len) {
                0 => Err(bad(vec![ch, p.pool])),
                l => Ok(vec![ch, l]),
            },
            (Self::GlobalAvgPool, &[ch, _]) => Ok(vec![ch]),
            (Self::ToSequence, &[ch, len]) => Ok(vec![len, ch]),
            (Self::Lstm(l), &[len, n]) if n == l.in_features() => {
                Ok(if l.return_sequences { vec![len, l.units()] } else { vec![l.units()] })
            }
            (Self::Residual(r), _) => {
                let mut body = input.to_vec();
                for l in &r.body {
                    body = l.output_shape(&body)?;
                }
                let mut short = input.to_vec();
                for l in &r.shortcut {
                    short = l.output_shape(&short)?;
                }
                if body != short {
                    return Err(bad(body));
                }
                Ok(body)
            }
            _ => Err(bad(vec![])),
        }
    }
}
