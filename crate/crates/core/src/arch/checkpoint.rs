//! Text checkpoints: magic line, config and input shape as key-value
//! sections, then one header line and one value line per tensor.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{build, ArchError, InputShape, ModelConfig, Network, Result};
use crate::kv::{KvDoc, KvSection};

pub const CHECKPOINT_MAGIC: &str = "UQTSC-CKPT-1";
const TENSORS_MARK: &str = "---";

fn fmt_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

fn fmt_shape(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

pub fn render_checkpoint(net: &Network) -> String {
    let mut config = net.config.to_kv();
    config.name = Some("config".into());
    let mut input = KvSection::named("input");
    input.push("channels", net.input.channels);
    input.push("length", net.input.length);
    let doc = KvDoc { sections: vec![KvSection::default(), config, input] };
    let mut out = format!("{CHECKPOINT_MAGIC}\n{}{TENSORS_MARK}\n", doc.render());
    net.visit_params(&mut |name, p| {
        let _ = writeln!(out, "param {name} {}", fmt_shape(&p.shape));
        fmt_values(&mut out, &p.value);
    });
    net.visit_buffers(&mut |name, b| {
        let _ = writeln!(out, "buffer {name} {}", b.len());
        fmt_values(&mut out, b);
    });
    out
}

fn bad(msg: impl Into<String>) -> ArchError {
    ArchError::Checkpoint(msg.into())
}

pub fn parse_checkpoint(text: &str) -> Result<Network> {
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad(format!("missing magic `{CHECKPOINT_MAGIC}`")));
    }
    let header: Vec<&str> = lines.by_ref().take_while(|l| *l != TENSORS_MARK).collect();
    let doc = KvDoc::parse(&header.join("\n"))?;
    let config = doc.named("config").next().ok_or_else(|| bad("missing [config] section"))?;
    let input = doc.named("input").next().ok_or_else(|| bad("missing [input] section"))?;
    let config = ModelConfig::from_kv(config)?;
    let input = InputShape {
        channels: input.parse("channels")?.ok_or_else(|| bad("missing input channels"))?,
        length: input.parse("length")?.ok_or_else(|| bad("missing input length"))?,
    };

    let mut params = BTreeMap::new();
    let mut buffers = BTreeMap::new();
    while let Some(head) = lines.next() {
        let parts: Vec<&str> = head.split_whitespace().collect();
        let [kind, name, shape] = parts[..] else {
            return Err(bad(format!("bad tensor header `{head}`")));
        };
        let dims: Vec<usize> = shape.split(',').map(|d| d.parse()).collect::<Result<_, _>>().map_err(|_| bad(format!("bad shape `{shape}`")))?;
        let values: Vec<f64> = lines
            .next()
            .ok_or_else(|| bad(format!("missing values for `{name}`")))?
            .split_whitespace()
            .map(|v| v.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("non-numeric value in `{name}`")))?;
        if values.len() != dims.iter().product::<usize>() {
            return Err(bad(format!("`{name}` has {} values for shape {shape}", values.len())));
        }
        let target = match kind {
            "param" => &mut params,
            "buffer" => &mut buffers,
            _ => return Err(bad(format!("unknown tensor kind `{kind}`"))),
        };
        if target.insert(name.to_string(), (dims, values)).is_some() {
            return Err(bad(format!("duplicate tensor `{name}`")));
        }
    }

    let mut net = build(&config, input, 0)?;
    let mut error = None;
    net.visit_params_mut(&mut |name, p| match params.remove(&name) {
        Some((dims, values)) if dims == p.shape => p.value = values,
        Some(_) => error = error.take().or(Some(bad(format!("shape mismatch for `{name}`")))),
        None => error = error.take().or(Some(bad(format!("missing parameter `{name}`")))),
    });
    net.visit_buffers_mut(&mut |name, b| match buffers.remove(&name) {
        Some((_, values)) if values.len() == b.len() => *b = values,
        Some(_) => error = error.take().or(Some(bad(format!("length mismatch for `{name}`")))),
        None => error = error.take().or(Some(bad(format!("missing buffer `{name}`")))),
    });
    if let Some(e) = error {
        return Err(e);
    }
    if let Some(name) = params.keys().chain(buffers.keys()).next() {
        return Err(bad(format!("unexpected tensor `{name}`")));
    }
    Ok(net)
}

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, render_checkpoint(net)).map_err(|source| ArchError::Io { path: path.to_path_buf(), source })
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|source| ArchError::Io { path: path.to_path_buf(), source })?;
    parse_checkpoint(&text)
}
