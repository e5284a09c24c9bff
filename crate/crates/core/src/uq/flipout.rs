use rand::Rng as _;
use rand_distr::StandardNormal;

use super::kl::{gaussian_kl, softplus};
use super::{Result, UqError};
use crate::nn::gemm::gemm;
use crate::nn::{dense_forward, Dense, Mode, NnError, Param, Tensor};
use crate::rng::Rng;

/// Initial posterior spread of every weight and bias.
pub const FLIPOUT_INIT_SIGMA: f64 = 0.05;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dense layer with a factorized Gaussian posterior over weights and bias,
/// sampled with Flipout sign perturbations per batch row.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipoutDense {
    /// `[in, out]`
    pub mu: Param,
    /// Pre-softplus spread, `[in, out]`.
    pub rho: Param,
    pub bias_mu: Param,
    pub bias_rho: Param,
}

#[derive(Debug, Clone)]
pub struct FlipoutCache {
    x: Tensor,
    noise: Option<Noise>,
}

#[derive(Debug, Clone)]
struct Noise {
    /// Shared weight noise `E`.
    eps: Vec<f64>,
    bias_eps: Vec<f64>,
    /// Input signs, `[batch, in]`.
    r: Vec<f64>,
    /// Output signs, `[batch, out]`.
    s: Vec<f64>,
}

impl FlipoutDense {
    /// Posterior means copied from `dense`, spreads set to the initial sigma.
    pub fn from_dense(dense: &Dense) -> Self {
        let rho0 = FLIPOUT_INIT_SIGMA.exp_m1().ln();
        Self {
            mu: dense.weight.clone(),
            rho: Param::filled(&dense.weight.shape, rho0),
            bias_mu: dense.bias.clone(),
            bias_rho: Param::filled(&dense.bias.shape, rho0),
        }
    }

    pub fn in_features(&self) -> usize {
        self.mu.shape[0]
    }

    pub fn out_features(&self) -> usize {
        self.mu.shape[1]
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.rho.value.iter().map(|&r| softplus(r)).collect()
    }

    pub fn bias_sigma(&self) -> Vec<f64> {
        self.bias_rho.value.iter().map(|&r| softplus(r)).collect()
    }

    /// The deterministic layer given by the posterior means.
    pub fn mean_dense(&self) -> Dense {
        Dense { weight: self.mu.clone(), bias: self.bias_mu.clone() }
    }

    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<(Tensor, FlipoutCache)> {
        let (b, inp) = x.dims2("flipout")?;
        let out = self.out_features();
        if inp != self.in_features() {
            return Err(NnError::ShapeMismatch { op: "flipout", expected: vec![b, self.in_features()], got: x.shape().to_vec() }.into());
        }
        if !mode.stochastic() {
            let y = dense_forward(x, &self.mu.value, &self.bias_mu.value, out)?;
            return Ok((y, FlipoutCache { x: x.clone(), noise: None }));
        }
        let mut normal = |n: usize| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
        let eps = normal(inp * out);
        let bias_eps = normal(out);
        let mut sign = |n: usize| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect::<Vec<_>>();
        let r = sign(b * inp);
        let s = sign(b * out);
        let noise = Noise { eps, bias_eps, r, s };
        let y = self.sampled_forward(x, &noise)?;
        Ok((y, FlipoutCache { x: x.clone(), noise: Some(noise) }))
    }

    fn delta_w(&self, eps: &[f64]) -> Vec<f64> {
        self.rho.value.iter().zip(eps).map(|(&r, e)| softplus(r) * e).collect()
    }

    fn sampled_forward(&self, x: &Tensor, n: &Noise) -> Result<Tensor> {
        let (b, inp) = x.dims2("flipout")?;
        let out = self.out_features();
        let bias: Vec<f64> = (0..out).map(|j| self.bias_mu.value[j] + softplus(self.bias_rho.value[j]) * n.bias_eps[j]).collect();
        let mut y = dense_forward(x, &self.mu.value, &bias, out)?.into_data();
        let xr: Vec<f64> = x.data().iter().zip(&n.r).map(|(a, r)| a * r).collect();
        let mut pert = vec![0.0; b * out];
        gemm(b, inp, out, &xr, false, &self.delta_w(&n.eps), false, &mut pert, 0.0);
        for ((v, p), s) in y.iter_mut().zip(pert).zip(&n.s) {
            *v += p * s;
        }
        Ok(Tensor::new(vec![b, out], y)?)
    }

    pub fn backward(&mut self, cache: &FlipoutCache, g: &Tensor) -> Result<Tensor> {
        let x = &cache.x;
        let (b, inp) = x.dims2("flipout backward")?;
        let out = self.out_features();
        if g.shape() != [b, out] {
            return Err(NnError::ShapeMismatch { op: "flipout backward", expected: vec![b, out], got: g.shape().to_vec() }.into());
        }
        gemm(inp, b, out, x.data(), true, g.data(), false, &mut self.mu.grad, 1.0);
        let mut gsum = vec![0.0; out];
        for row in g.data().chunks(out) {
            gsum.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        self.bias_mu.grad.iter_mut().zip(&gsum).for_each(|(a, v)| *a += v);
        let mut dx = vec![0.0; b * inp];
        gemm(b, out, inp, g.data(), false, &self.mu.value, true, &mut dx, 0.0);
        if let Some(n) = &cache.noise {
            let gs: Vec<f64> = g.data().iter().zip(&n.s).map(|(a, s)| a * s).collect();
            let xr: Vec<f64> = x.data().iter().zip(&n.r).map(|(a, r)| a * r).collect();
            let mut d_delta = vec![0.0; inp * out];
            gemm(inp, b, out, &xr, true, &gs, false, &mut d_delta, 0.0);
            for i in 0..inp * out {
                self.rho.grad[i] += d_delta[i] * n.eps[i] * sigmoid(self.rho.value[i]);
            }
            for j in 0..out {
                self.bias_rho.grad[j] += gsum[j] * n.bias_eps[j] * sigmoid(self.bias_rho.value[j]);
            }
            let mut dxr = vec![0.0; b * inp];
            gemm(b, out, inp, &gs, false, &self.delta_w(&n.eps), true, &mut dxr, 0.0);
            for ((d, p), r) in dx.iter_mut().zip(dxr).zip(&n.r) {
                *d += p * r;
            }
        }
        Ok(Tensor::new(vec![b, inp], dx)?)
    }

    /// KL divergence of the weight and bias posteriors from the standard normal prior.
    pub fn kl(&self) -> Result<f64> {
        Ok(gaussian_kl(&self.mu.value, &self.sigma())? + gaussian_kl(&self.bias_mu.value, &self.bias_sigma())?)
    }

    /// Adds `weight * dKL/d(mu, rho)` to the accumulated gradients.
    pub fn add_kl_grad(&mut self, weight: f64) -> Result<()> {
        for (mu, rho) in [(&mut self.mu, &mut self.rho), (&mut self.bias_mu, &mut self.bias_rho)] {
            for i in 0..mu.len() {
                let s = softplus(rho.value[i]);
                if !(s > 0.0) {
                    return Err(UqError::NonPositiveSigma(s));
                }
                mu.grad[i] += weight * mu.value[i];
                rho.grad[i] += weight * (s - 1.0 / s) * sigmoid(rho.value[i]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(rng: &mut Rng) -> FlipoutDense {
        FlipoutDense::from_dense(&Dense::new(3, 2, rng))
    }

    #[test]
    fn initial_sigma() {
        let mut rng = crate::rng::stream(0, "fo", 0);
        let f = layer(&mut rng);
        assert!(f.sigma().iter().all(|s| (s - FLIPOUT_INIT_SIGMA).abs() < 1e-12));
    }

    #[test]
    fn zero_sigma_is_mean_dense() {
        let mut rng = crate::rng::stream(1, "fo", 0);
        let mut f = layer(&mut rng);
        f.rho.value.iter_mut().for_each(|r| *r = f64::NEG_INFINITY);
        f.bias_rho.value.iter_mut().for_each(|r| *r = f64::NEG_INFINITY);
        let x = Tensor::from_fn(&[4, 3], |i| i as f64 * 0.1 - 0.5);
        let want = f.mean_dense().forward(&x).unwrap();
        let (y, _) = f.forward(&x, Mode::McInfer, &mut rng).unwrap();
        for (a, b) in y.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_rows_get_different_outputs() {
        let mut rng = crate::rng::stream(2, "fo", 0);
        let f = layer(&mut rng);
        let x = Tensor::new(vec![2, 3], vec![0.4, -0.2, 0.9, 0.4, -0.2, 0.9]).unwrap();
        let (y, _) = f.forward(&x, Mode::McInfer, &mut rng).unwrap();
        assert_ne!(y.data()[..2], y.data()[2..]);
    }

    #[test]
    fn output_variance_matches_weight_noise() {
        let mut rng = crate::rng::stream(3, "fo", 0);
        let mut f = layer(&mut rng);
        f.rho.value = vec![0.2, -0.5, 0.1, 0.7, -1.0, 0.3];
        f.bias_rho.value.iter_mut().for_each(|r| *r = f64::NEG_INFINITY);
        let xs = [0.5, -1.5, 2.0];
        let x = Tensor::new(vec![1, 3], xs.to_vec()).unwrap();
        let sigma = f.sigma();
        let n = 10_000;
        for j in 0..2 {
            let want: f64 = (0..3).map(|i| xs[i] * xs[i] * sigma[i * 2 + j] * sigma[i * 2 + j]).sum();
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let y = f.forward(&x, Mode::Train, &mut rng).unwrap().0.data()[j];
                s += y;
                s2 += y * y;
            }
            let mean = s / n as f64;
            let var = s2 / n as f64 - mean * mean;
            assert!((var / want - 1.0).abs() < 0.05, "{var} vs {want}");
        }
    }

    #[test]
    fn kl_gradient_matches_finite_difference() {
        let mut rng = crate::rng::stream(4, "fo", 0);
        let mut f = layer(&mut rng);
        f.add_kl_grad(1.0).unwrap();
        let h = 1e-6;
        for i in 0..f.rho.len() {
            let base = f.rho.value[i];
            f.rho.value[i] = base + h;
            let up = f.kl().unwrap();
            f.rho.value[i] = base - h;
            let down = f.kl().unwrap();
            f.rho.value[i] = base;
            let num = (up - down) / (2.0 * h);
            assert!((num - f.rho.grad[i]).abs() < 1e-6 * num.abs().max(1.0));
        }
    }
}
