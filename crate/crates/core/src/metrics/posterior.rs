use super::{MetricsError, Result};
use crate::arch::Network;
use crate::nn::{Mode, Tensor};
use crate::rng::stream;

/// `M` sampled class-probability vectors for one input and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub samples: Vec<[f64; 2]>,
    pub mean: [f64; 2],
}

impl PredictiveDistribution {
    pub fn from_samples(samples: Vec<[f64; 2]>) -> Result<Self> {
        if samples.is_empty() {
            return Err(MetricsError::InvalidSamples);
        }
        let m = samples.len() as f64;
        let mut mean = [0.0; 2];
        for s in &samples {
            mean[0] += s[0];
            mean[1] += s[1];
        }
        mean[0] /= m;
        mean[1] /= m;
        Ok(Self { samples, mean })
    }

    /// Argmax of the mean; ties go to class 0.
    pub fn predicted_class(&self) -> u8 {
        u8::from(self.mean[1] > self.mean[0])
    }
}

/// Runs `m` stochastic forward passes over `x`. Pass `j` draws its noise
/// from its own stream of `seed`, so results do not depend on `workers`.
pub fn predictive_posterior(net: &Network, x: &Tensor, m: usize, seed: u64, workers: usize) -> Result<Vec<PredictiveDistribution>> {
    if m == 0 {
        return Err(MetricsError::InvalidSamples);
    }
    let pass = |j: usize| -> Result<Vec<f64>> {
        let mut rng = stream(seed, "mc-pass", j as u64);
        Ok(net.predict_proba(x, Mode::McInfer, &mut rng)?.into_data())
    };
    let workers = workers.clamp(1, m);
    let passes: Vec<Vec<f64>> = if workers == 1 {
        (0..m).map(pass).collect::<Result<_>>()?
    } else {
        let mut slots: Vec<Option<Result<Vec<f64>>>> = (0..m).map(|_| None).collect();
        std::thread::scope(|s| {
            for (w, chunk) in slots.chunks_mut(m.div_ceil(workers)).enumerate() {
                let pass = &pass;
                let base = w * m.div_ceil(workers);
                s.spawn(move || {
                    for (i, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(pass(base + i));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every pass ran")).collect::<Result<_>>()?
    };
    let n = x.shape()[0];
    (0..n)
        .map(|i| PredictiveDistribution::from_samples(passes.iter().map(|p| [p[2 * i], p[2 * i + 1]]).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_samples() {
        let d = PredictiveDistribution::from_samples(vec![[0.8, 0.2], [0.6, 0.4]]).unwrap();
        assert!((d.mean[0] - 0.7).abs() < 1e-15 && (d.mean[1] - 0.3).abs() < 1e-15);
        assert_eq!(d.predicted_class(), 0);
        let one = PredictiveDistribution::from_samples(vec![[0.25, 0.75]]).unwrap();
        assert_eq!(one.mean, [0.25, 0.75]);
    }
}
