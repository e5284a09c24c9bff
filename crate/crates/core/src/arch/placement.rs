use super::{ArchError, Family, Network, Result, UqMethod};
use crate::nn::Layer;
use crate::uq::{DropConnectConv, DropConnectDense, Dropout, FlipoutDense};

/// Number of leading conv blocks that receive an MC Dropout layer.
const DROPOUT_BLOCKS: usize = 2;

fn head_index(layers: &[Layer]) -> Result<usize> {
    match layers.last() {
        Some(Layer::Dense(_)) => Ok(layers.len() - 1),
        _ => Err(ArchError::InvalidConfig("network does not end in a dense classifier".into())),
    }
}

fn dropconnect_conv(layer: Layer, rate: f64) -> Result<Layer> {
    Ok(match layer {
        Layer::Conv(c) => Layer::DropConnectConv(DropConnectConv::new(c, rate)?),
        other => other,
    })
}

fn dropconnect_dense(layer: Layer, rate: f64) -> Result<Layer> {
    Ok(match layer {
        Layer::Dense(d) => Layer::DropConnectDense(DropConnectDense::new(d, rate)?),
        other => other,
    })
}

/// Inserts the uncertainty layers `method` prescribes for the network's
/// family. `UqMethod::None` returns the network unchanged.
pub fn apply_uq(mut net: Network, method: UqMethod) -> Result<Network> {
    if method == UqMethod::None {
        return Ok(net);
    }
    if net.config.uq != UqMethod::None {
        return Err(ArchError::AlreadyWrapped(net.config.uq));
    }
    let family = net.config.family;
    let rate = net.config.dropout_rate;
    let head = head_index(&net.layers)?;
    let layers = std::mem::take(&mut net.layers);
    net.layers = match method {
        UqMethod::None => unreachable!(),
        UqMethod::McDropout => {
            if family.is_fixed() {
                return Err(ArchError::UnsupportedCombination { family, uq: method });
            }
            let mut out = Vec::with_capacity(layers.len() + 3);
            let mut convs = 0;
            for (i, l) in layers.into_iter().enumerate() {
                if i == head && family.has_lstm() {
                    out.push(Layer::Dropout(Dropout::new(rate)?));
                }
                let is_conv = matches!(l, Layer::Conv(_));
                out.push(l);
                if is_conv {
                    convs += 1;
                    if convs <= DROPOUT_BLOCKS {
                        out.push(Layer::Dropout(Dropout::new(rate)?));
                    }
                }
            }
            out
        }
        UqMethod::DropConnect => {
            let mut out = Vec::with_capacity(layers.len());
            for (i, l) in layers.into_iter().enumerate() {
                out.push(match (family, l) {
                    (Family::Cnn | Family::CnnLstm, l) => dropconnect_conv(l, rate)?,
                    (Family::Lstm, l) if i == head => dropconnect_dense(l, rate)?,
                    (Family::Fcn, l) => dropconnect_dense(dropconnect_conv(l, rate)?, rate)?,
                    (Family::Resnet, Layer::Residual(mut r)) => {
                        // Projection shortcuts keep their plain convolutions.
                        r.body = r.body.into_iter().map(|b| dropconnect_conv(b, rate)).collect::<Result<_>>()?;
                        Layer::Residual(r)
                    }
                    (_, l) => l,
                });
            }
            out
        }
        UqMethod::Flipout => {
            let mut out = layers;
            if let Layer::Dense(d) = &out[head] {
                out[head] = Layer::Flipout(FlipoutDense::from_dense(d));
            }
            out
        }
    };
    net.config.uq = method;
    Ok(net)
}

fn strip_layer(layer: Layer) -> Option<Layer> {
    match layer {
        Layer::Dropout(_) => None,
        Layer::DropConnectConv(d) => Some(Layer::Conv(d.inner)),
        Layer::DropConnectDense(d) => Some(Layer::Dense(d.inner)),
        Layer::Flipout(f) => Some(Layer::Dense(f.mean_dense())),
        Layer::Residual(mut r) => {
            r.body = r.body.into_iter().filter_map(strip_layer).collect();
            r.shortcut = r.shortcut.into_iter().filter_map(strip_layer).collect();
            Some(Layer::Residual(r))
        }
        other => Some(other),
    }
}

/// Replaces every uncertainty layer by its deterministic counterpart.
pub fn strip_uq(mut net: Network) -> Network {
    net.layers = std::mem::take(&mut net.layers).into_iter().filter_map(strip_layer).collect();
    net.config.uq = UqMethod::None;
    net
}
