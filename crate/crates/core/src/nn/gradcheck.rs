//! Central-difference verification of analytic gradients.

use rand::Rng as _;

use super::{
    softmax_cross_entropy, softmax_cross_entropy_grad, BatchNorm1d, Conv1d, Ctx, Dense, Layer, Lstm, MaxPool1d, Mode,
    Padding, Result, Tensor,
};
use crate::rng::{stream, Rng};

/// Relative errors use `max(|analytic|, |numeric|, FLOOR)` as denominator so
/// gradients that are zero on both sides do not divide by zero.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Dense { inp: usize, out: usize },
    Conv1d { channels: usize, filters: usize, kernel: usize, padding: Padding },
    BatchNorm1d { channels: usize },
    MaxPool1d { pool: usize },
    GlobalAvgPool,
    Relu,
    Lstm { inp: usize, units: usize, return_sequences: bool },
    /// Softmax with cross-entropy, checked with respect to the logits.
    Softmax { classes: usize },
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_ERROR_FLOOR)
}

fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
    // Magnitudes bounded away from zero keep ReLU kinks and pooling ties
    // further than eps from every sample point.
    Tensor::from_fn(shape, |_| {
        let m = rng.random_range(0.1..1.0);
        if rng.random::<bool>() {
            m
        } else {
            -m
        }
    })
}

/// Builds the layer with random parameters and a matching random input.
pub fn grad_check(spec: &LayerSpec, seed: u64, eps: f64) -> Result<f64> {
    let mut rng = stream(seed, "gradcheck", 0);
    let (mut layer, shape) = match *spec {
        LayerSpec::Dense { inp, out } => (Layer::Dense(Dense::new(inp, out, &mut rng)), vec![2, inp]),
        LayerSpec::Conv1d { channels, filters, kernel, padding } => {
            (Layer::Conv(Conv1d::new(channels, filters, kernel, padding, &mut rng)), vec![2, channels, 12])
        }
        LayerSpec::BatchNorm1d { channels } => {
            let mut bn = BatchNorm1d::new(channels);
            bn.gamma.value.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
            bn.beta.value.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
            (Layer::BatchNorm(bn), vec![4, channels, 5])
        }
        LayerSpec::MaxPool1d { pool } => (Layer::MaxPool(MaxPool1d { pool }), vec![2, 3, 4 * pool + 1]),
        LayerSpec::GlobalAvgPool => (Layer::GlobalAvgPool, vec![2, 3, 6]),
        LayerSpec::Relu => (Layer::Relu, vec![3, 7]),
        LayerSpec::Lstm { inp, units, return_sequences } => {
            (Layer::Lstm(Lstm::new(inp, units, return_sequences, &mut rng)), vec![2, 5, inp])
        }
        LayerSpec::Softmax { classes } => {
            let x = random_tensor(&[3, classes], &mut rng);
            let labels: Vec<usize> = (0..3).map(|_| rng.random_range(0..classes)).collect();
            return softmax_check(&x, &labels, eps);
        }
    };
    let x = random_tensor(&shape, &mut rng);
    check_layer(&mut layer, &x, Mode::Train, seed, eps)
}

fn softmax_check(x: &Tensor, labels: &[usize], eps: f64) -> Result<f64> {
    let (_, p) = softmax_cross_entropy(x, labels)?;
    let g = softmax_cross_entropy_grad(&p, labels);
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let mut up = x.clone();
        up.data_mut()[i] += eps;
        let mut down = x.clone();
        down.data_mut()[i] -= eps;
        let n = (softmax_cross_entropy(&up, labels)?.0 - softmax_cross_entropy(&down, labels)?.0) / (2.0 * eps);
        worst = worst.max(rel_error(g.data()[i], n));
    }
    Ok(worst)
}

/// Max relative error over every parameter and input coordinate of
/// `loss = sum(R * layer(x))` for a random projection `R`. The layer's rng is
/// reset to the same state before each evaluation, freezing any noise.
pub fn check_layer(layer: &mut Layer, x: &Tensor, mode: Mode, seed: u64, eps: f64) -> Result<f64> {
    let noise = stream(seed, "gradcheck-noise", 0);
    let eval = |layer: &Layer, x: &Tensor| -> Result<Tensor> {
        let mut rng = noise.clone();
        Ok(layer.forward(x, &mut Ctx { mode, rng: &mut rng })?.0)
    };
    let y = eval(layer, x)?;
    let mut prng = stream(seed, "gradcheck-projection", 0);
    let r = Tensor::from_fn(y.shape(), |_| prng.random_range(-1.0..1.0));
    let loss = |y: &Tensor| y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum::<f64>();

    layer.visit_params_mut("", &mut |_, p| p.zero_grad());
    let mut rng = noise.clone();
    let (_, cache) = layer.forward(x, &mut Ctx { mode, rng: &mut rng })?;
    let dx = layer.backward(cache, &r)?;

    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let mut up = x.clone();
        up.data_mut()[i] += eps;
        let mut down = x.clone();
        down.data_mut()[i] -= eps;
        let n = (loss(&eval(layer, &up)?) - loss(&eval(layer, &down)?)) / (2.0 * eps);
        worst = worst.max(rel_error(dx.data()[i], n));
    }

    let mut grads = Vec::new();
    layer.visit_params("", &mut |_, p| grads.push(p.grad.clone()));
    for (k, grad) in grads.iter().enumerate() {
        for (i, &analytic) in grad.iter().enumerate() {
            let shift = |layer: &mut Layer, d: f64| {
                let mut idx = 0;
                layer.visit_params_mut("", &mut |_, p| {
                    if idx == k {
                        p.value[i] += d;
                    }
                    idx += 1;
                });
            };
            shift(layer, eps);
            let up = loss(&eval(layer, x)?);
            shift(layer, -2.0 * eps);
            let down = loss(&eval(layer, x)?);
            shift(layer, eps);
            worst = worst.max(rel_error(analytic, (up - down) / (2.0 * eps)));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes() {
        let dense = grad_check(&LayerSpec::Dense { inp: 3, out: 2 }, 0, 1e-5).unwrap();
        assert!(dense < 1e-6, "{dense}");
        let conv = LayerSpec::Conv1d { channels: 2, filters: 3, kernel: 4, padding: Padding::Same };
        let e = grad_check(&conv, 0, 1e-5).unwrap();
        assert!(e < 1e-6, "{e}");
        let lstm = LayerSpec::Lstm { inp: 3, units: 4, return_sequences: false };
        let e = grad_check(&lstm, 0, 1e-5).unwrap();
        assert!(e < 1e-5, "{e}");
    }
}
