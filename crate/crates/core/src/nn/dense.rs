use rand::Rng as _;

use super::gemm::gemm;
use super::{NnError, Param, Result, Tensor};
use crate::rng::Rng;

/// `y = x W + b` for `x: [batch, in]`, `w: [in, out]`.
pub fn dense_forward(x: &Tensor, w: &[f64], b: &[f64], out: usize) -> Result<Tensor> {
    let (batch, inp) = x.dims2("dense")?;
    if w.len() != inp * out || b.len() != out {
        return Err(NnError::ShapeMismatch { op: "dense", expected: vec![inp, out], got: vec![w.len() / out.max(1), b.len()] });
    }
    let mut y = vec![0.0; batch * out];
    for row in y.chunks_mut(out) {
        row.copy_from_slice(b);
    }
    gemm(batch, inp, out, x.data(), false, w, false, &mut y, 1.0);
    Tensor::new(vec![batch, out], y)
}

/// Accumulates `dw += x^T g`, `db += sum_rows(g)` and returns `dx = g W^T`.
pub fn dense_backward(x: &Tensor, g: &Tensor, w: &[f64], dw: &mut [f64], db: &mut [f64]) -> Result<Tensor> {
    let (batch, inp) = x.dims2("dense backward")?;
    let (gb, out) = g.dims2("dense backward")?;
    if gb != batch || w.len() != inp * out {
        return Err(NnError::ShapeMismatch { op: "dense backward", expected: vec![batch, out], got: g.shape().to_vec() });
    }
    gemm(inp, batch, out, x.data(), true, g.data(), false, dw, 1.0);
    for row in g.data().chunks(out) {
        db.iter_mut().zip(row).for_each(|(d, r)| *d += r);
    }
    let mut dx = vec![0.0; batch * inp];
    gemm(batch, out, inp, g.data(), false, w, true, &mut dx, 0.0);
    Tensor::new(vec![batch, inp], dx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
}

impl Dense {
    /// Uniform in `±1/sqrt(in)`, zero bias.
    pub fn new(inp: usize, out: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (inp as f64).sqrt();
        let w = (0..inp * out).map(|_| rng.random_range(-bound..bound)).collect();
        Self { weight: Param::new(&[inp, out], w), bias: Param::zeros(&[out]) }
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        dense_forward(x, &self.weight.value, &self.bias.value, self.out_features())
    }

    pub fn backward(&mut self, x: &Tensor, g: &Tensor) -> Result<Tensor> {
        dense_backward(x, g, &self.weight.value, &mut self.weight.grad, &mut self.bias.grad)
    }
}
