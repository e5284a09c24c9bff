use super::{Result, UqError};

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `sum KL(N(mu, sigma^2) || N(0, 1))`.
pub fn gaussian_kl(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    if mu.len() != sigma.len() {
        return Err(UqError::LengthMismatch(mu.len(), sigma.len()));
    }
    let mut kl = 0.0;
    for (&m, &s) in mu.iter().zip(sigma) {
        if !(s > 0.0) {
            return Err(UqError::NonPositiveSigma(s));
        }
        kl += -s.ln() + (s * s + m * m) / 2.0 - 0.5;
    }
    Ok(kl)
}

pub fn elbo_loss(ce_loss: f64, kl: f64, kl_weight: f64) -> f64 {
    ce_loss + kl_weight * kl
}
