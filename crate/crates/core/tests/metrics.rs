use proptest::prelude::*;
use rand::Rng as _;
use uqtsc::metrics::*;
use uqtsc::rng::stream;

#[test]
fn f1_matches_confusion_matrix_oracle() {
    let mut rng = stream(11, "f1", 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let preds: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let mut m = [[0.0f64; 2]; 2];
        for (&y, &p) in labels.iter().zip(&preds) {
            m[y as usize][p as usize] += 1.0;
        }
        let s = f1_and_accuracy(&preds, &labels).unwrap();
        let mut weighted = 0.0;
        for c in 0..2 {
            let tp = m[c][c];
            let precision = if m[0][c] + m[1][c] > 0.0 { tp / (m[0][c] + m[1][c]) } else { 0.0 };
            let recall = if m[c][0] + m[c][1] > 0.0 { tp / (m[c][0] + m[c][1]) } else { 0.0 };
            let f = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            assert!((s.f1[c] - f).abs() < 1e-12);
            weighted += f * (m[c][0] + m[c][1]) / n as f64;
        }
        assert!((s.weighted_f1 - weighted).abs() < 1e-12);
        assert!((s.accuracy - (m[0][0] + m[1][1]) / n as f64).abs() < 1e-12);
    }
}

#[test]
fn calibrated_stream_has_small_ece() {
    let mut rng = stream(12, "calibrated", 0);
    let (mut probs, mut labels) = (Vec::new(), Vec::new());
    for _ in 0..10_000 {
        let c: f64 = rng.random_range(0.5..1.0);
        let pred: u8 = rng.random_range(0..2);
        let correct = rng.random::<f64>() < c;
        probs.push(if pred == 1 { [1.0 - c, c] } else { [c, 1.0 - c] });
        labels.push(if correct { pred } else { 1 - pred });
    }
    let (e, bins) = ece(&probs, &labels, 10, EceMode::Confidence).unwrap();
    assert!(e < 0.03, "{e}");
    assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 10_000);
}

fn distribution() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0..=1.0f64).prop_map(|p| [1.0 - p, p]), 1..60)
}

proptest! {
    #[test]
    fn single_bin_ece_is_accuracy_gap(probs in distribution(), seed in any::<u64>()) {
        let mut rng = stream(seed, "labels", 0);
        let labels: Vec<u8> = probs.iter().map(|_| rng.random_range(0..2)).collect();
        let n = probs.len() as f64;
        let acc = probs.iter().zip(&labels).filter(|(p, &y)| u8::from(p[1] > p[0]) == y).count() as f64 / n;
        let conf = probs.iter().map(|p| p[0].max(p[1])).sum::<f64>() / n;
        let (e, _) = ece(&probs, &labels, 1, EceMode::Confidence).unwrap();
        prop_assert!((e - (acc - conf).abs()).abs() < 1e-12);
        let (e10, _) = ece(&probs, &labels, 10, EceMode::Confidence).unwrap();
        prop_assert!((0.0..=1.0).contains(&e10));
    }

    #[test]
    fn entropy_is_bounded_and_symmetric(p in 0.0..=1.0f64) {
        let h = predictive_entropy(&[1.0 - p, p]).unwrap();
        prop_assert!((0.0..=2f64.ln() + 1e-15).contains(&h));
        prop_assert_eq!(h, predictive_entropy(&[p, 1.0 - p]).unwrap());
    }

    #[test]
    fn posterior_mean_ignores_sample_order(mut samples in distribution()) {
        let a = PredictiveDistribution::from_samples(samples.clone()).unwrap();
        samples.reverse();
        let b = PredictiveDistribution::from_samples(samples).unwrap();
        prop_assert!((a.mean[0] - b.mean[0]).abs() < 1e-12);
        prop_assert!((a.mean[1] - b.mean[1]).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_u_counts_pairs(a in prop::collection::vec(0u8..8, 1..20), b in prop::collection::vec(0u8..8, 1..20)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let pairs: f64 = a.iter().flat_map(|x| b.iter().map(move |y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 })).sum();
        let r = rank_sum_greater(&a, &b);
        prop_assert_eq!(r.u, pairs);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }
}
