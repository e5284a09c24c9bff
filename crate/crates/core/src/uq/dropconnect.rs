use super::dropout::sample_mask;
use super::{check_rate, Result};
use crate::nn::{conv1d_backward, conv1d_forward, dense_backward, dense_forward, Conv1d, Dense, Mode, Tensor};
use crate::rng::Rng;

/// Scaled weight mask (`0` or `1/(1-p)` per weight).
pub type WeightMask = Vec<f64>;

/// A weight layer whose kernel may be dropped out.
#[derive(Debug, Clone, Copy)]
pub enum WeightLayer<'a> {
    Dense(&'a Dense),
    Conv(&'a Conv1d),
}

impl WeightLayer<'_> {
    fn weight(&self) -> &[f64] {
        match self {
            Self::Dense(d) => &d.weight.value,
            Self::Conv(c) => &c.weight.value,
        }
    }

    fn forward_with(&self, x: &Tensor, w: &[f64]) -> Result<Tensor> {
        Ok(match self {
            Self::Dense(d) => dense_forward(x, w, &d.bias.value, d.out_features())?,
            Self::Conv(c) => conv1d_forward(x, w, &c.bias.value, c.filters(), c.kernel(), c.padding)?,
        })
    }
}

fn masked(w: &[f64], mask: &[f64]) -> Vec<f64> {
    w.iter().zip(mask).map(|(a, m)| a * m).collect()
}

/// Masks the layer's weights (never its bias) when `mode` is stochastic.
pub fn dropconnect_forward(
    x: &Tensor,
    layer: WeightLayer<'_>,
    p: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor, Option<WeightMask>)> {
    let p = check_rate(p)?;
    if !mode.stochastic() || p == 0.0 {
        return Ok((layer.forward_with(x, layer.weight())?, None));
    }
    let mask = sample_mask(layer.weight().len(), p, rng);
    let y = layer.forward_with(x, &masked(layer.weight(), &mask))?;
    Ok((y, Some(mask)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropConnectDense {
    pub inner: Dense,
    rate: f64,
}

impl DropConnectDense {
    pub fn new(inner: Dense, rate: f64) -> Result<Self> {
        Ok(Self { inner, rate: check_rate(rate)? })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<(Tensor, Option<WeightMask>)> {
        dropconnect_forward(x, WeightLayer::Dense(&self.inner), self.rate, mode, rng)
    }

    pub fn forward_with_mask(&self, x: &Tensor, mask: &[f64]) -> Result<Tensor> {
        WeightLayer::Dense(&self.inner).forward_with(x, &masked(&self.inner.weight.value, mask))
    }

    pub fn backward(&mut self, x: &Tensor, mask: Option<&[f64]>, g: &Tensor) -> Result<Tensor> {
        let Some(mask) = mask else {
            return Ok(self.inner.backward(x, g)?);
        };
        let w = masked(&self.inner.weight.value, mask);
        let mut dw = vec![0.0; w.len()];
        let dx = dense_backward(x, g, &w, &mut dw, &mut self.inner.bias.grad)?;
        for ((acc, d), m) in self.inner.weight.grad.iter_mut().zip(dw).zip(mask) {
            *acc += d * m;
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropConnectConv {
    pub inner: Conv1d,
    rate: f64,
}

impl DropConnectConv {
    pub fn new(inner: Conv1d, rate: f64) -> Result<Self> {
        Ok(Self { inner, rate: check_rate(rate)? })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<(Tensor, Option<WeightMask>)> {
        dropconnect_forward(x, WeightLayer::Conv(&self.inner), self.rate, mode, rng)
    }

    pub fn backward(&mut self, x: &Tensor, mask: Option<&[f64]>, g: &Tensor) -> Result<Tensor> {
        let Some(mask) = mask else {
            return Ok(self.inner.backward(x, g)?);
        };
        let c = &mut self.inner;
        let w = masked(&c.weight.value, mask);
        let mut dw = vec![0.0; w.len()];
        let dx = conv1d_backward(x, g, &w, c.filters(), c.kernel(), c.padding, &mut dw, &mut c.bias.grad)?;
        for ((acc, d), m) in c.weight.grad.iter_mut().zip(dw).zip(mask) {
            *acc += d * m;
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Padding, Param};
    use rand::Rng as _;

    #[test]
    fn fixed_mask_drops_second_row() {
        let d = Dense { weight: Param::new(&[2, 1], vec![1.0, 1.0]), bias: Param::zeros(&[1]) };
        let dc = DropConnectDense::new(d, 0.5).unwrap();
        let x = Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert_eq!(dc.forward_with_mask(&x, &[2.0, 0.0]).unwrap().data(), &[2.0]);
    }

    #[test]
    fn off_mode_matches_plain_layers() {
        let mut rng = crate::rng::stream(5, "dc", 0);
        let conv = Conv1d::new(2, 3, 4, Padding::Same, &mut rng);
        let x = Tensor::from_fn(&[2, 2, 9], |_| rng.random_range(-1.0..1.0));
        let dc = DropConnectConv::new(conv.clone(), 0.3).unwrap();
        assert_eq!(dc.forward(&x, Mode::Infer, &mut rng).unwrap().0, conv.forward(&x).unwrap());
        let dc0 = DropConnectConv::new(conv.clone(), 0.0).unwrap();
        assert_eq!(dc0.forward(&x, Mode::McInfer, &mut rng).unwrap().0, conv.forward(&x).unwrap());
    }

    #[test]
    fn monte_carlo_mean_and_variance() {
        // One output y = sum_j w_j m_j x_j with m_j ~ Bernoulli(0.75)/0.75:
        // E[y] = w.x and Var[y] = sum_j (w_j x_j)^2 p/(1-p).
        let w = vec![0.5, -1.0, 2.0];
        let xs = [1.0, 2.0, 0.5];
        let d = Dense { weight: Param::new(&[3, 1], w.clone()), bias: Param::filled(&[1], 0.2) };
        let dc = DropConnectDense::new(d, 0.25).unwrap();
        let x = Tensor::new(vec![1, 3], xs.to_vec()).unwrap();
        let mut rng = crate::rng::stream(6, "dc", 0);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = dc.forward(&x, Mode::McInfer, &mut rng).unwrap().0.data()[0] - 0.2;
            s += y;
            s2 += y * y;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let want_mean: f64 = w.iter().zip(&xs).map(|(a, b)| a * b).sum();
        let want_var: f64 = w.iter().zip(&xs).map(|(a, b)| (a * b).powi(2)).sum::<f64>() * 0.25 / 0.75;
        assert!((mean / want_mean - 1.0).abs() < 0.01, "{mean} vs {want_mean}");
        assert!((var / want_var - 1.0).abs() < 0.03, "{var} vs {want_var}");
    }
}
