use super::{MetricsError, Result};

/// Natural-log Shannon entropy with `0 ln 0 = 0`.
pub fn predictive_entropy(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(MetricsError::NotNormalized(sum));
    }
    Ok(probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((predictive_entropy(&[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(predictive_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        let want = -(0.7f64 * 0.7f64.ln() + 0.3 * 0.3f64.ln());
        assert!((predictive_entropy(&[0.7, 0.3]).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.6109).abs() < 1e-4);
        assert!(matches!(predictive_entropy(&[0.7, 0.2]), Err(MetricsError::NotNormalized(_))));
    }
}
