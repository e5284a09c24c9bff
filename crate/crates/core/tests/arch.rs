use proptest::prelude::*;
use uqtsc::arch::{
    apply_uq, build, parse_checkpoint, render_checkpoint, residual_block, strip_uq, ArchError, Family, InputShape,
    ModelConfig, Network, UqMethod,
};
use uqtsc::nn::{Ctx, Layer, Mode, Tensor};
use uqtsc::rng::stream;

fn imu(length: usize) -> InputShape {
    InputShape { channels: 6, length }
}

fn dummy(net: &Network, batch: usize) -> Tensor {
    Tensor::from_fn(&[batch, net.input.channels, net.input.length], |i| ((i * 7919) % 113) as f64 / 56.0 - 1.0)
}

fn infer(net: &Network, x: &Tensor) -> Tensor {
    let mut rng = stream(0, "test", 0);
    net.forward(x, &mut Ctx { mode: Mode::Infer, rng: &mut rng }).unwrap().0
}

#[test]
fn cnn_single_block_shapes() {
    let net = build(&ModelConfig::cnn(&[16], &[7], 2), imu(400), 1).unwrap();
    let shapes = net.layer_shapes().unwrap();
    assert_eq!(shapes, vec![vec![16, 400], vec![16, 400], vec![16, 400], vec![16, 200], vec![16], vec![2]]);
    assert_eq!(infer(&net, &dummy(&net, 3)).shape(), &[3, 2]);
}

#[test]
fn cnn_pooling_collapse() {
    let c = ModelConfig::cnn(&[16, 16, 16], &[4, 4, 4], 8);
    assert!(matches!(build(&c, imu(100), 0), Err(ArchError::ShapeCollapse { block: 3 })));
}

#[test]
fn lstm_shapes() {
    let net = build(&ModelConfig::lstm(&[41]), imu(400), 0).unwrap();
    assert_eq!(net.layer_shapes().unwrap(), vec![vec![400, 6], vec![41], vec![2]]);
    let net = build(&ModelConfig::lstm(&[113, 13]), imu(50), 0).unwrap();
    assert_eq!(net.layer_shapes().unwrap(), vec![vec![50, 6], vec![50, 113], vec![13], vec![2]]);
    assert!(matches!(build(&ModelConfig::lstm(&[4]), imu(50), 0), Err(ArchError::InvalidConfig(_))));
}

#[test]
fn cnn_lstm_shapes_and_determinism() {
    let c = ModelConfig::cnn_lstm(&[26], &[9], 2, &[67]);
    let net = build(&c, imu(1000), 5).unwrap();
    let shapes = net.layer_shapes().unwrap();
    assert_eq!(shapes[0], vec![26, 1000]);
    assert_eq!(shapes[3], vec![26, 500]);
    assert_eq!(shapes[4], vec![500, 26]);
    assert_eq!(shapes[5], vec![67]);
    assert_eq!(shapes[6], vec![2]);
    assert_eq!(build(&c, imu(1000), 5).unwrap(), net);
    assert!(build(&ModelConfig::cnn_lstm(&[26], &[9], 2, &[]), imu(1000), 0).is_err());
}

#[test]
fn param_counts() {
    // Counting oracle: conv F*C*K + F, batchnorm 2F, dense I*O + O, LSTM 4(U(I+U)+U).
    let conv = |c: usize, f: usize, k: usize| f * c * k + f;
    let net = build(&ModelConfig::lstm(&[8]), imu(20), 0).unwrap();
    assert_eq!(net.param_count(), 4 * (8 * (6 + 8) + 8) + (8 * 2 + 2));

    let fcn = build(&ModelConfig::fixed(Family::Fcn), imu(64), 0).unwrap();
    let Layer::Conv(c1) = &fcn.layers[0] else { panic!() };
    assert_eq!((c1.weight.len(), c1.bias.len()), (6144, 128));
    let want = conv(6, 128, 8) + 256 + conv(128, 256, 5) + 512 + conv(256, 128, 3) + 256 + 128 * 2 + 2;
    assert_eq!(fcn.param_count(), want);
    assert_eq!(fcn.layer_shapes().unwrap().last().unwrap(), &vec![2]);

    let resnet = build(&ModelConfig::fixed(Family::Resnet), imu(32), 0).unwrap();
    let block = |c: usize, f: usize| conv(c, f, 8) + conv(f, f, 5) + conv(f, f, 3) + 6 * f + if c == f { 0 } else { conv(c, f, 1) + 2 * f };
    assert_eq!(resnet.param_count(), block(6, 128) + block(128, 256) + block(256, 128) + 128 * 2 + 2);
    assert_eq!(infer(&resnet, &dummy(&resnet, 2)).shape(), &[2, 2]);
}

#[test]
fn resnet_shortcuts() {
    let mut rng = stream(0, "t", 0);
    let r = residual_block(6, 128, &mut rng);
    let Layer::Conv(c) = &r.shortcut[0] else { panic!() };
    assert_eq!(c.kernel(), 1);
    assert!(residual_block(64, 64, &mut rng).shortcut.is_empty());
}

fn count(layers: &[Layer], pred: fn(&Layer) -> bool) -> usize {
    layers
        .iter()
        .map(|l| match l {
            Layer::Residual(r) => count(&r.body, pred) + count(&r.shortcut, pred),
            l => usize::from(pred(l)),
        })
        .sum()
}

#[test]
fn mc_dropout_only_in_first_two_blocks() {
    let c = ModelConfig::cnn(&[16, 16, 16], &[4, 4, 4], 2).with_uq(UqMethod::McDropout, 0.3);
    let net = build(&c, imu(64), 0).unwrap();
    let names: Vec<&str> = net.layers.iter().map(|l| l.name()).collect();
    assert_eq!(&names[..3], ["conv1d", "dropout", "batchnorm1d"]);
    assert_eq!(&names[5..7], ["conv1d", "dropout"]);
    assert_eq!(&names[10..12], ["conv1d", "batchnorm1d"]);
    assert_eq!(count(&net.layers, |l| matches!(l, Layer::Dropout(_))), 2);

    let c = ModelConfig::cnn_lstm(&[16], &[4], 2, &[8]).with_uq(UqMethod::McDropout, 0.3);
    let net = build(&c, imu(64), 0).unwrap();
    let n = net.layers.len();
    assert!(matches!(net.layers[n - 2], Layer::Dropout(_)));
    assert_eq!(count(&net.layers, |l| matches!(l, Layer::Dropout(_))), 2);
}

#[test]
fn dropconnect_placement() {
    let lstm = build(&ModelConfig::lstm(&[8]).with_uq(UqMethod::DropConnect, 0.25), imu(16), 0).unwrap();
    assert!(matches!(lstm.layers.last(), Some(Layer::DropConnectDense(_))));
    assert_eq!(count(&lstm.layers, |l| matches!(l, Layer::DropConnectDense(_) | Layer::DropConnectConv(_))), 1);

    let cnn = build(&ModelConfig::cnn(&[16, 16], &[4, 4], 2).with_uq(UqMethod::DropConnect, 0.25), imu(16), 0).unwrap();
    assert_eq!(count(&cnn.layers, |l| matches!(l, Layer::DropConnectConv(_))), 2);
    assert!(matches!(cnn.layers.last(), Some(Layer::Dense(_))));

    let fcn = build(&ModelConfig::fixed(Family::Fcn).with_uq(UqMethod::DropConnect, 0.25), imu(16), 0).unwrap();
    assert_eq!(count(&fcn.layers, |l| matches!(l, Layer::Conv(_) | Layer::Dense(_))), 0);

    let resnet = build(&ModelConfig::fixed(Family::Resnet).with_uq(UqMethod::DropConnect, 0.25), imu(16), 0).unwrap();
    assert_eq!(count(&resnet.layers, |l| matches!(l, Layer::DropConnectConv(_))), 9);
    // The three projection shortcuts stay plain.
    assert_eq!(count(&resnet.layers, |l| matches!(l, Layer::Conv(_))), 3);
}

#[test]
fn flipout_replaces_only_the_head() {
    for c in [
        ModelConfig::cnn(&[16], &[4], 2),
        ModelConfig::lstm(&[8]),
        ModelConfig::cnn_lstm(&[16], &[4], 2, &[8]),
        ModelConfig::fixed(Family::Resnet),
    ] {
        let net = build(&c.with_uq(UqMethod::Flipout, 0.25), imu(16), 0).unwrap();
        assert!(matches!(net.layers.last(), Some(Layer::Flipout(_))));
        assert_eq!(count(&net.layers, |l| matches!(l, Layer::Flipout(_))), 1);
    }
}

#[test]
fn wrapping_rules() {
    let base = build(&ModelConfig::cnn(&[16], &[4], 2).with_uq(UqMethod::None, 0.3), imu(16), 0).unwrap();
    assert_eq!(apply_uq(base.clone(), UqMethod::None).unwrap(), base);
    let wrapped = apply_uq(base.clone(), UqMethod::McDropout).unwrap();
    assert!(matches!(apply_uq(wrapped, UqMethod::Flipout), Err(ArchError::AlreadyWrapped(UqMethod::McDropout))));
    let fcn = build(&ModelConfig::fixed(Family::Fcn), imu(16), 0).unwrap();
    assert!(matches!(
        apply_uq(fcn, UqMethod::McDropout),
        Err(ArchError::UnsupportedCombination { family: Family::Fcn, uq: UqMethod::McDropout })
    ));
}

#[test]
fn table_two_pairs_build() {
    let pairs = [
        (ModelConfig::cnn(&[22, 21], &[11, 16], 2), [UqMethod::McDropout, UqMethod::None, UqMethod::Flipout].as_slice()),
        (ModelConfig::cnn_lstm(&[26], &[9], 2, &[67]), &[UqMethod::McDropout, UqMethod::Flipout]),
        (ModelConfig::lstm(&[113, 13]), &[UqMethod::None, UqMethod::DropConnect, UqMethod::McDropout]),
        (ModelConfig::fixed(Family::Resnet), &[UqMethod::Flipout]),
    ];
    for (c, methods) in pairs {
        for &m in methods {
            let net = build(&c.clone().with_uq(m, 0.25), imu(40), 0).unwrap();
            assert_eq!(infer(&net, &dummy(&net, 2)).shape(), &[2, 2]);
        }
    }
}

#[test]
fn stripping_recovers_deterministic_outputs() {
    for (c, m) in [
        (ModelConfig::cnn(&[16, 20], &[5, 4], 2), UqMethod::McDropout),
        (ModelConfig::cnn_lstm(&[16], &[4], 2, &[8, 9]), UqMethod::DropConnect),
        (ModelConfig::lstm(&[10]), UqMethod::Flipout),
        (ModelConfig::fixed(Family::Resnet), UqMethod::DropConnect),
    ] {
        let plain = build(&c, imu(24), 3).unwrap();
        let wrapped = build(&c.with_uq(m, 0.25), imu(24), 3).unwrap();
        let stripped = strip_uq(wrapped.clone());
        assert_eq!(stripped.layers, plain.layers);
        let x = dummy(&plain, 3);
        let (a, b) = (infer(&plain, &x), infer(&wrapped, &x));
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn checkpoint_roundtrip() {
    let c = ModelConfig::cnn_lstm(&[16, 17], &[4, 5], 2, &[8]).with_uq(UqMethod::Flipout, 0.1);
    let mut net = build(&c, imu(32), 11).unwrap();
    // Give running statistics non-default values so they must be restored.
    let mut rng = stream(1, "t", 0);
    let x = dummy(&net, 4);
    let (_, caches) = net.forward(&x, &mut Ctx { mode: Mode::Train, rng: &mut rng }).unwrap();
    net.commit(&caches);
    let text = render_checkpoint(&net);
    assert!(text.starts_with("UQTSC-CKPT-1\n"));
    let back = parse_checkpoint(&text).unwrap();
    assert_eq!(back, net);
    assert_eq!(render_checkpoint(&back), text);
    assert!(matches!(parse_checkpoint("nope"), Err(ArchError::Checkpoint(_))));
    let truncated: String = text.lines().take(text.lines().count() - 2).collect::<Vec<_>>().join("\n");
    assert!(matches!(parse_checkpoint(&truncated), Err(ArchError::Checkpoint(_))));
}

fn config_strategy() -> impl Strategy<Value = ModelConfig> {
    let blocks = prop::collection::vec((16usize..=128, 4usize..=16), 1..=3);
    let units = prop::collection::vec(8usize..=128, 1..=3);
    (0..3usize, blocks, 2usize..=8, units, 16usize..=64).prop_map(|(fam, blocks, pool, units, batch)| {
        let f: Vec<usize> = blocks.iter().map(|b| b.0).collect();
        let k: Vec<usize> = blocks.iter().map(|b| b.1).collect();
        let c = match fam {
            0 => ModelConfig::cnn(&f, &k, pool),
            1 => ModelConfig::lstm(&units),
            _ => ModelConfig::cnn_lstm(&f, &k, pool, &units),
        };
        c.with_batch_size(batch)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]
    #[test]
    fn random_configs_execute(c in config_strategy(), len in 1usize..48, uq in 0usize..4) {
        let c = c.with_uq(UqMethod::ALL[uq], 0.2);
        let mut analytic = len;
        let mut collapses = false;
        if c.family.has_cnn_blocks() {
            for _ in 0..c.cnn_blocks {
                analytic /= c.max_pool;
                collapses |= analytic == 0;
            }
        }
        match build(&c, InputShape { channels: 3, length: len }, 0) {
            Err(ArchError::ShapeCollapse { .. }) => prop_assert!(collapses),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
            Ok(net) => {
                prop_assert!(!collapses);
                let mut rng = stream(0, "t", 0);
                let y = net.forward(&dummy(&net, 2), &mut Ctx { mode: Mode::McInfer, rng: &mut rng }).unwrap().0;
                prop_assert_eq!(y.shape(), &[2, 2]);
            }
        }
    }
}
