use super::{MetricsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EceMode {
    /// Bins by max-probability confidence; compares with accuracy.
    #[default]
    Confidence,
    /// Bins by class-1 probability; compares with the class-1 frequency.
    PositiveClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub count: usize,
    /// Mean score in the bin (`e_i`); 0 for empty bins.
    pub mean_score: f64,
    /// Empirical frequency in the bin (`o_i`); 0 for empty bins.
    pub frequency: f64,
}

/// Index of the right-inclusive bin holding `score`: the first bin is
/// `[0, 1/K]`, bin `i > 0` is `(i/K, (i+1)/K]`.
pub fn bin_index(score: f64, k: usize) -> usize {
    let mut i = ((score * k as f64).ceil() as usize).saturating_sub(1);
    // Guard against products such as 0.3 * 10 = 3.0000000000000004.
    if i > 0 && score <= i as f64 / k as f64 {
        i -= 1;
    }
    i.min(k - 1)
}

/// Expected calibration error of binary mean probabilities with `k` bins.
pub fn ece(mean_probs: &[[f64; 2]], labels: &[u8], k: usize, mode: EceMode) -> Result<(f64, Vec<Bin>)> {
    if k == 0 {
        return Err(MetricsError::InvalidBins);
    }
    if mean_probs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if mean_probs.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(mean_probs.len(), labels.len()));
    }
    let mut sums = vec![(0usize, 0.0, 0.0); k];
    for (p, &y) in mean_probs.iter().zip(labels) {
        let (score, hit) = match mode {
            EceMode::Confidence => {
                let pred = u8::from(p[1] > p[0]);
                (p[0].max(p[1]), f64::from(u8::from(pred == y)))
            }
            EceMode::PositiveClass => (p[1], f64::from(y)),
        };
        let s = &mut sums[bin_index(score, k)];
        s.0 += 1;
        s.1 += score;
        s.2 += hit;
    }
    let n = mean_probs.len() as f64;
    let mut total = 0.0;
    let bins = sums
        .into_iter()
        .map(|(count, score, hits)| {
            if count == 0 {
                return Bin { count, mean_score: 0.0, frequency: 0.0 };
            }
            let c = count as f64;
            let bin = Bin { count, mean_score: score / c, frequency: hits / c };
            total += c / n * (bin.frequency - bin.mean_score).abs();
            bin
        })
        .collect();
    Ok((total, bins))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> (Vec<[f64; 2]>, Vec<u8>) {
        (vec![[0.1, 0.9], [0.9, 0.1], [0.6, 0.4], [0.4, 0.6]], vec![1, 0, 1, 1])
    }

    #[test]
    fn hand_binned_cases() {
        let (p, y) = four();
        assert_eq!(ece(&p, &y, 2, EceMode::Confidence).unwrap().0, 0.0);
        let (e, bins) = ece(&p, &y, 4, EceMode::Confidence).unwrap();
        assert!((e - 0.1).abs() < 1e-12);
        assert_eq!(bins[2].count, 2);
        assert!((bins[2].mean_score - 0.6).abs() < 1e-15 && (bins[2].frequency - 0.5).abs() < 1e-15);
        assert_eq!(bins[3].count, 2);
    }

    #[test]
    fn confident_and_correct_is_zero() {
        let p = vec![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(ece(&p, &[0, 1], 10, EceMode::Confidence).unwrap().0, 0.0);
    }

    #[test]
    fn bin_edges_are_right_inclusive() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.30000001, 10), 3);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.75, 4), 2);
        assert_eq!(bin_index(0.5, 2), 0);
    }

    #[test]
    fn errors() {
        assert!(matches!(ece(&[], &[], 10, EceMode::Confidence), Err(MetricsError::EmptyInput)));
        assert!(matches!(ece(&[[0.5, 0.5]], &[0], 0, EceMode::Confidence), Err(MetricsError::InvalidBins)));
    }
}
