use rand::Rng as _;

use super::{check_rate, Result};
use crate::nn::{Mode, Tensor};
use crate::rng::Rng;

/// Inverted-scaling Bernoulli mask: each entry is `0` or `1/(1-p)`.
pub fn sample_mask(n: usize, p: f64, rng: &mut Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..n).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect()
}

/// Applies a 0/1 keep pattern with inverted scaling.
pub fn apply_mask(x: &Tensor, keep: &[bool], p: f64) -> Result<Tensor> {
    let p = check_rate(p)?;
    let mut y = x.clone();
    for (v, &k) in y.data_mut().iter_mut().zip(keep) {
        *v = if k { *v / (1.0 - p) } else { 0.0 };
    }
    Ok(y)
}

/// Returns the output and the scaled mask used (`None` when inactive).
pub fn mc_dropout_forward(x: &Tensor, p: f64, mode: Mode, rng: &mut Rng) -> Result<(Tensor, Option<Vec<f64>>)> {
    let p = check_rate(p)?;
    if !mode.stochastic() || p == 0.0 {
        return Ok((x.clone(), None));
    }
    let mask = sample_mask(x.len(), p, rng);
    let mut y = x.clone();
    y.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
    Ok((y, Some(mask)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self { rate: check_rate(rate)? })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uq::UqError;

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = crate::rng::stream(0, "do", 0);
        let x = Tensor::from_fn(&[3, 4], |i| i as f64);
        for mode in [Mode::Train, Mode::Infer, Mode::McInfer] {
            assert_eq!(mc_dropout_forward(&x, 0.0, mode, &mut rng).unwrap().0, x);
        }
        assert_eq!(mc_dropout_forward(&x, 0.5, Mode::Infer, &mut rng).unwrap().0, x);
    }

    #[test]
    fn fixed_mask_arithmetic() {
        let x = Tensor::new(vec![1, 2], vec![2.0, 2.0]).unwrap();
        assert_eq!(apply_mask(&x, &[true, false], 0.5).unwrap().data(), &[4.0, 0.0]);
    }

    #[test]
    fn rate_one_rejected() {
        assert_eq!(Dropout::new(1.0).unwrap_err(), UqError::InvalidRate(1.0));
        assert!(Dropout::new(-0.1).is_err());
    }

    #[test]
    fn unbiased_in_expectation() {
        let mut rng = crate::rng::stream(3, "do", 0);
        let x = Tensor::from_fn(&[1, 4], |_| 1.5);
        let mut sum = [0.0; 4];
        let n = 100_000;
        for _ in 0..n {
            let (y, _) = mc_dropout_forward(&x, 0.3, Mode::McInfer, &mut rng).unwrap();
            sum.iter_mut().zip(y.data()).for_each(|(s, v)| *s += v);
        }
        for s in sum {
            assert!((s / n as f64 / 1.5 - 1.0).abs() < 0.01);
        }
    }
}
