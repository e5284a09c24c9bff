use rand::Rng as _;
use uqtsc::arch::{build, Family, InputShape, ModelConfig, UqMethod};
use uqtsc::nn::*;
use uqtsc::rng::stream;
use uqtsc::uq::FlipoutDense;

const SEEDS: u64 = 20;

fn worst(spec: LayerSpec) -> f64 {
    (0..SEEDS).map(|s| grad_check(&spec, s, 1e-5).unwrap()).fold(0.0, f64::max)
}

#[test]
fn every_layer_passes_gradient_check() {
    let specs = [
        LayerSpec::Dense { inp: 3, out: 2 },
        LayerSpec::Conv1d { channels: 2, filters: 3, kernel: 4, padding: Padding::Same },
        LayerSpec::Conv1d { channels: 2, filters: 3, kernel: 3, padding: Padding::Valid },
        LayerSpec::BatchNorm1d { channels: 3 },
        LayerSpec::MaxPool1d { pool: 2 },
        LayerSpec::GlobalAvgPool,
        LayerSpec::Relu,
        LayerSpec::Lstm { inp: 3, units: 4, return_sequences: false },
        LayerSpec::Lstm { inp: 2, units: 3, return_sequences: true },
        LayerSpec::Softmax { classes: 2 },
    ];
    for spec in specs {
        let e = worst(spec);
        assert!(e < 1e-5, "{spec:?}: {e:e}");
    }
}

#[test]
fn flipout_mean_gradient_with_frozen_noise() {
    for seed in 0..SEEDS {
        let mut rng = stream(seed, "flipout-layer", 0);
        let mut layer = Layer::Flipout(FlipoutDense::from_dense(&Dense::new(4, 3, &mut rng)));
        let x = Tensor::from_fn(&[3, 4], |_| rng.random_range(-1.0..1.0));
        let e = check_layer(&mut layer, &x, Mode::Train, seed, 1e-5).unwrap();
        assert!(e < 1e-5, "seed {seed}: {e:e}");
    }
}

#[test]
fn softmax_rows_are_distributions() {
    let mut rng = stream(1, "softmax", 0);
    let logits = Tensor::from_fn(&[200, 2], |_| rng.random_range(-800.0..800.0));
    let p = softmax(&logits).unwrap();
    for row in p.data().chunks(2) {
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn adam_with_zero_lr_is_identity() {
    let mut p = Param::new(&[3], vec![0.5, -1.0, 2.0]);
    p.grad = vec![1.0, -3.0, 0.25];
    let before = p.value.clone();
    for t in 1..5 {
        adam_step(&mut p, 0.0, 0.9, 0.999, 1e-8, t).unwrap();
    }
    assert_eq!(p.value, before);
}

#[test]
fn random_networks_stay_finite() {
    let mut rng = stream(9, "fuzz-net", 0);
    for i in 0..12 {
        let blocks = rng.random_range(1..=3);
        let filters: Vec<usize> = (0..blocks).map(|_| rng.random_range(16..=64)).collect();
        let kernels: Vec<usize> = (0..blocks).map(|_| rng.random_range(4..=16)).collect();
        let pool = rng.random_range(2..=4);
        let units: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(8..=32)).collect();
        let uq = [UqMethod::None, UqMethod::McDropout, UqMethod::DropConnect, UqMethod::Flipout][i % 4];
        let config = match i % 3 {
            0 => ModelConfig::cnn(&filters, &kernels, pool),
            1 => ModelConfig::lstm(&units),
            _ => ModelConfig::cnn_lstm(&filters, &kernels, pool, &units),
        }
        .with_uq(uq, 0.3);
        let net = build(&config, InputShape { channels: 6, length: 100 }, i as u64).unwrap();
        let scale = 10f64.powi(rng.random_range(-3..=3));
        let x = Tensor::from_fn(&[2, 6, 100], |_| scale * rng.random_range(-1.0..1.0));
        for mode in [Mode::Train, Mode::Infer, Mode::McInfer] {
            let p = net.predict_proba(&x, mode, &mut rng).unwrap();
            assert!(p.is_finite(), "{} {mode:?}", config.describe());
        }
    }
    for family in [Family::Fcn, Family::Resnet] {
        let net = build(&ModelConfig::fixed(family), InputShape { channels: 6, length: 64 }, 3).unwrap();
        let x = Tensor::from_fn(&[2, 6, 64], |_| rng.random_range(-5.0..5.0));
        assert!(net.predict_proba(&x, Mode::Infer, &mut rng).unwrap().is_finite());
    }
}
