use super::placement::apply_uq;
use super::{ArchError, Family, InputShape, ModelConfig, Network, Result, UqMethod};
use crate::nn::{BatchNorm1d, Conv1d, Dense, Layer, Lstm, MaxPool1d, Padding, Residual};
use crate::rng::{stream, Rng};

/// Filter counts of the three FCN blocks and of the three ResNet blocks.
pub const FIXED_FILTERS: [usize; 3] = [128, 256, 128];
/// Kernel sizes inside an FCN stack and inside every ResNet block.
pub const FIXED_KERNELS: [usize; 3] = [8, 5, 3];

const CLASSES: usize = 2;

fn expect_family(config: &ModelConfig, family: Family) -> Result<()> {
    if config.family != family {
        return Err(ArchError::InvalidConfig(format!("builder for {family} got family {}", config.family)));
    }
    Ok(())
}

fn check_input(input: InputShape) -> Result<()> {
    if input.channels == 0 || input.length == 0 {
        return Err(ArchError::InvalidConfig(format!("empty input shape {}x{}", input.channels, input.length)));
    }
    Ok(())
}

/// Builds the network `config` describes, uncertainty layers included.
/// Parameter initialization is a pure function of `seed`.
pub fn build(config: &ModelConfig, input: InputShape, seed: u64) -> Result<Network> {
    let base = match config.family {
        Family::Cnn => build_cnn(config, input, seed),
        Family::Lstm => build_lstm(config, input, seed),
        Family::CnnLstm => build_cnn_lstm(config, input, seed),
        Family::Fcn => build_fcn(config, input, seed),
        Family::Resnet => build_resnet(config, input, seed),
    }?;
    apply_uq(base, config.uq)
}

fn plain(config: &ModelConfig, input: InputShape, layers: Vec<Layer>) -> Network {
    let config = ModelConfig { uq: UqMethod::None, ..config.normalized() };
    Network { config, input, layers }
}

/// Conv blocks conv(same) -> batchnorm -> relu -> maxpool; returns the
/// resulting channel count.
fn conv_blocks(config: &ModelConfig, input: InputShape, rng: &mut Rng, layers: &mut Vec<Layer>) -> Result<usize> {
    let (mut channels, mut length) = (input.channels, input.length);
    for b in 0..config.cnn_blocks {
        let (f, k) = (config.filters[b], config.kernels[b]);
        length /= config.max_pool;
        if length == 0 {
            return Err(ArchError::ShapeCollapse { block: b + 1 });
        }
        layers.push(Layer::Conv(Conv1d::new(channels, f, k, Padding::Same, rng)));
        layers.push(Layer::BatchNorm(BatchNorm1d::new(f)));
        layers.push(Layer::Relu);
        layers.push(Layer::MaxPool(MaxPool1d { pool: config.max_pool }));
        channels = f;
    }
    Ok(channels)
}

fn lstm_stack(config: &ModelConfig, mut inp: usize, rng: &mut Rng, layers: &mut Vec<Layer>) -> usize {
    layers.push(Layer::ToSequence);
    for i in 0..config.lstm_layers {
        let last = i + 1 == config.lstm_layers;
        layers.push(Layer::Lstm(Lstm::new(inp, config.units[i], !last, rng)));
        inp = config.units[i];
    }
    inp
}

pub fn build_cnn(config: &ModelConfig, input: InputShape, seed: u64) -> Result<Network> {
    expect_family(config, Family::Cnn)?;
    config.validate()?;
    check_input(input)?;
    let mut rng = stream(seed, "init", 0);
    let mut layers = Vec::new();
    let channels = conv_blocks(config, input, &mut rng, &mut layers)?;
    layers.push(Layer::GlobalAvgPool);
    layers.push(Layer::Dense(Dense::new(channels, CLASSES, &mut rng)));
    Ok(plain(config, input, layers))
}

pub fn build_lstm(config: &ModelConfig, input: InputShape, seed: u64) -> Result<Network> {
    expect_family(config, Family::Lstm)?;
    config.validate()?;
    check_input(input)?;
    let mut rng = stream(seed, "init", 0);
    let mut layers = Vec::new();
    let units = lstm_stack(config, input.channels, &mut rng, &mut layers);
    layers.push(Layer::Dense(Dense::new(units, CLASSES, &mut rng)));
    Ok(plain(config, input, layers))
}

pub fn build_cnn_lstm(config: &ModelConfig, input: InputShape, seed: u64) -> Result<Network> {
    expect_family(config, Family::CnnLstm)?;
    config.validate()?;
    check_input(input)?;
    let mut rng = stream(seed, "init", 0);
    let mut layers = Vec::new();
    let channels = conv_blocks(config, input, &mut rng, &mut layers)?;
    let units = lstm_stack(config, channels, &mut rng, &mut layers);
    layers.push(Layer::Dense(Dense::new(units, CLASSES, &mut rng)));
    Ok(plain(config, input, layers))
}

pub fn build_fcn(config: &ModelConfig, input: InputShape, seed: u64) -> Result<Network> {
    expect_family(config, Family::Fcn)?;
    check_input(input)?;
    let mut rng = stream(seed, "init", 0);
    let mut layers = Vec::new();
    let mut channels = input.channels;
    for (f, k) in FIXED_FILTERS.into_iter().zip(FIXED_KERNELS) {
        layers.push(Layer::Conv(Conv1d::new(channels, f, k, Padding::Same, &mut rng)));
        layers.push(Layer::BatchNorm(BatchNorm1d::new(f)));
        layers.push(Layer::Relu);
        channels = f;
    }
    layers.push(Layer::GlobalAvgPool);
    layers.push(Layer::Dense(Dense::new(channels, CLASSES, &mut rng)));
    Ok(plain(config, input, layers))
}

/// Three conv/batchnorm stages (kernels 8, 5, 3) with a 1x1 projection
/// shortcut when the channel count changes and an identity otherwise.
pub fn residual_block(channels: usize, filters: usize, rng: &mut Rng) -> Residual {
    let mut body = Vec::new();
    let mut c = channels;
    for (i, k) in FIXED_KERNELS.into_iter().enumerate() {
        body.push(Layer::Conv(Conv1d::new(c, filters, k, Padding::Same, rng)));
        body.push(Layer::BatchNorm(BatchNorm1d::new(filters)));
        if i + 1 < FIXED_KERNELS.len() {
            body.push(Layer::Relu);
        }
        c = filters;
    }
    let shortcut = if channels == filters {
        Vec::new()
    } else {
        vec![
            Layer::Conv(Conv1d::new(channels, filters, 1, Padding::Same, rng)),
            Layer::BatchNorm(BatchNorm1d::new(filters)),
        ]
    };
    Residual { body, shortcut }
}

pub fn build_resnet(config: &ModelConfig, input: InputShape, seed: u64) -> Result<Network> {
    expect_family(config, Family::Resnet)?;
    check_input(input)?;
    let mut rng = stream(seed, "init", 0);
    let mut layers = Vec::new();
    let mut channels = input.channels;
    for f in FIXED_FILTERS {
        layers.push(Layer::Residual(Box::new(residual_block(channels, f, &mut rng))));
        channels = f;
    }
    layers.push(Layer::GlobalAvgPool);
    layers.push(Layer::Dense(Dense::new(channels, CLASSES, &mut rng)));
    Ok(plain(config, input, layers))
}
