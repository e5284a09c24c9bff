use super::{ArchError, InputShape, ModelConfig, Result};
use crate::nn::{softmax, Cache, Ctx, Layer, Mode, Param, Tensor};
use crate::rng::Rng;

/// Ordered layers built from a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: ModelConfig,
    pub input: InputShape,
    pub layers: Vec<Layer>,
}

impl Network {
    fn check_input(&self, x: &Tensor) -> Result<()> {
        let want = [self.input.channels, self.input.length];
        if x.shape().len() != 3 || x.shape()[1..] != want {
            let mut expected = vec![0];
            expected.extend(want);
            return Err(ArchError::InputMismatch { expected, got: x.shape().to_vec() });
        }
        Ok(())
    }

    /// Logits for `x: [batch, channels, length]` plus the per-layer caches.
    pub fn forward(&self, x: &Tensor, ctx: &mut Ctx) -> Result<(Tensor, Vec<Cache>)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for l in &self.layers {
            let (y, c) = l.forward(&h, ctx)?;
            caches.push(c);
            h = y;
        }
        Ok((h, caches))
    }

    /// Accumulates gradients of all parameters given the logit gradient.
    pub fn backward(&mut self, caches: Vec<Cache>, grad: &Tensor) -> Result<()> {
        let mut g = grad.clone();
        for (l, c) in self.layers.iter_mut().zip(caches).rev() {
            g = l.backward(c, &g)?;
        }
        Ok(())
    }

    pub fn commit(&mut self, caches: &[Cache]) {
        for (l, c) in self.layers.iter_mut().zip(caches) {
            l.commit(c);
        }
    }

    /// Class probabilities, evaluated in chunks to bound memory.
    pub fn predict_proba(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        const CHUNK: usize = 64;
        self.check_input(x)?;
        let n = x.shape()[0];
        let mut out = Vec::with_capacity(n * 2);
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let (logits, _) = self.forward(&x.rows(start, end), &mut Ctx { mode, rng })?;
            out.extend_from_slice(softmax(&logits)?.data());
            start = end;
        }
        Ok(Tensor::new(vec![n, out.len() / n], out)?)
    }

    pub fn visit_params(&self, f: &mut dyn FnMut(String, &Param)) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit_params(&format!("{i}."), f);
        }
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(String, &mut Param)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_params_mut(&format!("{i}."), f);
        }
    }

    pub fn visit_buffers(&self, f: &mut dyn FnMut(String, &[f64])) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit_buffers(&format!("{i}."), f);
        }
    }

    pub fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(String, &mut Vec<f64>)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_buffers_mut(&format!("{i}."), f);
        }
    }

    pub fn zero_grad(&mut self) {
        self.visit_params_mut(&mut |_, p| p.zero_grad());
    }

    /// Trainable scalar count; running statistics are not included.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, p| n += p.len());
        n
    }

    pub fn kl(&self) -> Result<f64> {
        let mut total = 0.0;
        for l in &self.layers {
            total += l.kl()?;
        }
        Ok(total)
    }

    pub fn add_kl_grad(&mut self, weight: f64) -> Result<()> {
        for l in &mut self.layers {
            l.add_kl_grad(weight)?;
        }
        Ok(())
    }

    pub fn has_variational_layers(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::Flipout(_)))
    }

    /// Per-sample output shape after each layer.
    pub fn layer_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = vec![self.input.channels, self.input.length];
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            shape = l.output_shape(&shape)?;
            out.push(shape.clone());
        }
        Ok(out)
    }
}
