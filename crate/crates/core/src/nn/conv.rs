use rand::Rng as _;

use super::gemm::gemm;
use super::{NnError, Param, Result, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output length equals input length; zeros split floor left / ceil right.
    Same,
    Valid,
}

impl Padding {
    pub fn amounts(self, kernel: usize) -> (usize, usize) {
        match self {
            Self::Same => {
                let left = (kernel - 1) / 2;
                (left, kernel - 1 - left)
            }
            Self::Valid => (0, 0),
        }
    }

    pub fn out_len(self, len: usize, kernel: usize) -> Result<usize> {
        let (l, r) = self.amounts(kernel);
        let padded = len + l + r;
        if kernel == 0 || kernel > padded {
            return Err(NnError::KernelTooLarge { kernel, padded });
        }
        Ok(padded - kernel + 1)
    }
}

struct Geometry {
    batch: usize,
    channels: usize,
    len: usize,
    kernel: usize,
    pad_left: usize,
    out_len: usize,
}

impl Geometry {
    fn new(x: &Tensor, w_len: usize, filters: usize, kernel: usize, padding: Padding) -> Result<Self> {
        let (batch, channels, len) = x.dims3("conv1d")?;
        if w_len != filters * channels * kernel {
            return Err(NnError::ShapeMismatch {
                op: "conv1d",
                expected: vec![filters, channels, kernel],
                got: vec![w_len],
            });
        }
        let out_len = padding.out_len(len, kernel)?;
        Ok(Self { batch, channels, len, kernel, pad_left: padding.amounts(kernel).0, out_len })
    }

    /// Unrolls one sample into `[channels * kernel, out_len]`.
    fn im2col(&self, sample: &[f64], cols: &mut [f64]) {
        let (k, lo) = (self.kernel, self.out_len);
        for c in 0..self.channels {
            let row_in = &sample[c * self.len..(c + 1) * self.len];
            for j in 0..k {
                let dst = &mut cols[(c * k + j) * lo..(c * k + j + 1) * lo];
                for (t, d) in dst.iter_mut().enumerate() {
                    let src = (t + j).wrapping_sub(self.pad_left);
                    *d = if src < self.len { row_in[src] } else { 0.0 };
                }
            }
        }
    }
}

/// Cross-correlation of `x: [batch, channels, len]` with `w: [filters, channels, kernel]`.
pub fn conv1d_forward(x: &Tensor, w: &[f64], b: &[f64], filters: usize, kernel: usize, padding: Padding) -> Result<Tensor> {
    let g = Geometry::new(x, w.len(), filters, kernel, padding)?;
    if b.len() != filters {
        return Err(NnError::ShapeMismatch { op: "conv1d bias", expected: vec![filters], got: vec![b.len()] });
    }
    let ck = g.channels * kernel;
    let mut cols = vec![0.0; ck * g.out_len];
    let mut y = vec![0.0; g.batch * filters * g.out_len];
    let in_per = g.channels * g.len;
    for (n, out) in y.chunks_mut(filters * g.out_len).enumerate() {
        g.im2col(&x.data()[n * in_per..(n + 1) * in_per], &mut cols);
        for (f, row) in out.chunks_mut(g.out_len).enumerate() {
            row.iter_mut().for_each(|v| *v = b[f]);
        }
        gemm(filters, ck, g.out_len, w, false, &cols, false, out, 1.0);
    }
    Tensor::new(vec![g.batch, filters, g.out_len], y)
}

/// Accumulates weight and bias gradients and returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_backward(
    x: &Tensor,
    grad: &Tensor,
    w: &[f64],
    filters: usize,
    kernel: usize,
    padding: Padding,
    dw: &mut [f64],
    db: &mut [f64],
) -> Result<Tensor> {
    let g = Geometry::new(x, w.len(), filters, kernel, padding)?;
    if grad.shape() != [g.batch, filters, g.out_len] {
        return Err(NnError::ShapeMismatch {
            op: "conv1d backward",
            expected: vec![g.batch, filters, g.out_len],
            got: grad.shape().to_vec(),
        });
    }
    let ck = g.channels * kernel;
    let lo = g.out_len;
    let mut cols = vec![0.0; ck * lo];
    let mut dcols = vec![0.0; ck * lo];
    let in_per = g.channels * g.len;
    let mut dx = vec![0.0; g.batch * in_per];
    for n in 0..g.batch {
        let gn = &grad.data()[n * filters * lo..(n + 1) * filters * lo];
        g.im2col(&x.data()[n * in_per..(n + 1) * in_per], &mut cols);
        gemm(filters, lo, ck, gn, false, &cols, true, dw, 1.0);
        for (f, row) in gn.chunks(lo).enumerate() {
            db[f] += row.iter().sum::<f64>();
        }
        gemm(ck, filters, lo, w, true, gn, false, &mut dcols, 0.0);
        let dxn = &mut dx[n * in_per..(n + 1) * in_per];
        for c in 0..g.channels {
            for j in 0..kernel {
                let src = &dcols[(c * kernel + j) * lo..(c * kernel + j + 1) * lo];
                for (t, v) in src.iter().enumerate() {
                    let pos = (t + j).wrapping_sub(g.pad_left);
                    if pos < g.len {
                        dxn[c * g.len + pos] += v;
                    }
                }
            }
        }
    }
    Tensor::new(x.shape().to_vec(), dx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `[filters, channels, kernel]`
    pub weight: Param,
    pub bias: Param,
    pub padding: Padding,
}

impl Conv1d {
    /// He-uniform weights (`±sqrt(6 / fan_in)`), zero bias.
    pub fn new(channels: usize, filters: usize, kernel: usize, padding: Padding, rng: &mut Rng) -> Self {
        let bound = (6.0 / (channels * kernel) as f64).sqrt();
        let w = (0..filters * channels * kernel).map(|_| rng.random_range(-bound..bound)).collect();
        Self { weight: Param::new(&[filters, channels, kernel], w), bias: Param::zeros(&[filters]), padding }
    }

    pub fn filters(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape[2]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        conv1d_forward(x, &self.weight.value, &self.bias.value, self.filters(), self.kernel(), self.padding)
    }

    pub fn backward(&mut self, x: &Tensor, g: &Tensor) -> Result<Tensor> {
        let (f, k) = (self.filters(), self.kernel());
        conv1d_backward(x, g, &self.weight.value, f, k, self.padding, &mut self.weight.grad, &mut self.bias.grad)
    }
}
