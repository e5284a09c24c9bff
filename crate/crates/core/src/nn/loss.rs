use super::{NnError, Result, Tensor};

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (_, c) = logits.dims2("softmax")?;
    let mut p = logits.clone();
    for row in p.data_mut().chunks_mut(c) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    Ok(p)
}

/// Mean negative log-likelihood and the softmax probabilities.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (b, c) = logits.dims2("softmax_cross_entropy")?;
    if labels.len() != b {
        return Err(NnError::ShapeMismatch { op: "softmax_cross_entropy", expected: vec![b], got: vec![labels.len()] });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= c) {
        return Err(NnError::LabelOutOfRange { label, classes: c });
    }
    let mut total = 0.0;
    for (row, &label) in logits.data().chunks(c).zip(labels) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - row[label];
    }
    Ok((total / b as f64, softmax(logits)?))
}

/// Gradient of the mean cross-entropy with respect to the logits.
pub fn softmax_cross_entropy_grad(probs: &Tensor, labels: &[usize]) -> Tensor {
    let c = probs.shape()[1];
    let b = labels.len() as f64;
    let mut g = probs.clone();
    for (row, &label) in g.data_mut().chunks_mut(c).zip(labels) {
        row[label] -= 1.0;
        row.iter_mut().for_each(|v| *v /= b);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let x = Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap();
        let (loss, p) = softmax_cross_entropy(&x, &[1]).unwrap();
        assert_eq!(p.data(), &[0.5, 0.5]);
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn large_logit_is_stable() {
        let x = Tensor::new(vec![1, 2], vec![100.0, 0.0]).unwrap();
        let (loss, p) = softmax_cross_entropy(&x, &[0]).unwrap();
        assert!(loss < 1e-6 && loss >= 0.0);
        assert!(p.is_finite());
    }

    #[test]
    fn mixed_batch_is_mean_nll() {
        let x = Tensor::new(vec![2, 2], vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        let (loss, _) = softmax_cross_entropy(&x, &[0, 0]).unwrap();
        let nll = |a: f64, b: f64| -(a.exp() / (a.exp() + b.exp())).ln();
        assert!((loss - (nll(1.0, -1.0) + nll(0.5, 2.0)) / 2.0).abs() < 1e-12);
        assert_eq!(
            softmax_cross_entropy(&x, &[0, 2]).unwrap_err(),
            NnError::LabelOutOfRange { label: 2, classes: 2 }
        );
    }
}
