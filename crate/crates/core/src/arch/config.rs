use std::fmt;
use std::str::FromStr;

use super::{ArchError, Result};
use crate::kv::{KvError, KvSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Cnn,
    Lstm,
    CnnLstm,
    Fcn,
    Resnet,
}

impl Family {
    pub const ALL: [Family; 5] = [Self::Cnn, Self::Lstm, Self::CnnLstm, Self::Fcn, Self::Resnet];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cnn => "cnn",
            Self::Lstm => "lstm",
            Self::CnnLstm => "cnn_lstm",
            Self::Fcn => "fcn",
            Self::Resnet => "resnet",
        }
    }

    pub fn has_cnn_blocks(self) -> bool {
        matches!(self, Self::Cnn | Self::CnnLstm)
    }

    pub fn has_lstm(self) -> bool {
        matches!(self, Self::Lstm | Self::CnnLstm)
    }

    /// Fixed benchmark architectures with no searchable structure.
    pub fn is_fixed(self) -> bool {
        matches!(self, Self::Fcn | Self::Resnet)
    }
}

impl FromStr for Family {
    type Err = ArchError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ArchError::InvalidConfig(format!("unknown family `{s}`")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UqMethod {
    None,
    McDropout,
    DropConnect,
    Flipout,
}

impl UqMethod {
    pub const ALL: [UqMethod; 4] = [Self::None, Self::McDropout, Self::DropConnect, Self::Flipout];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::McDropout => "mc_dropout",
            Self::DropConnect => "dropconnect",
            Self::Flipout => "flipout",
        }
    }
}

impl FromStr for UqMethod {
    type Err = ArchError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ArchError::InvalidConfig(format!("unknown uq method `{s}`")))
    }
}

impl fmt::Display for UqMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-sample input shape: channels by window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputShape {
    pub channels: usize,
    pub length: usize,
}

/// Searchable ranges of the configuration space (inclusive).
pub mod ranges {
    pub const BLOCKS: (usize, usize) = (1, 3);
    pub const FILTERS: (usize, usize) = (16, 128);
    pub const KERNEL: (usize, usize) = (4, 16);
    pub const POOL: (usize, usize) = (2, 8);
    pub const LSTM_LAYERS: (usize, usize) = (1, 3);
    pub const CELLS: (usize, usize) = (8, 128);
    pub const BATCH: (usize, usize) = (16, 64);
    pub const DROPOUT: (f64, f64) = (0.0, 0.5);
}

/// Rate used by the fixed benchmark architectures.
pub const FIXED_DROPOUT_RATE: f64 = 0.25;

/// Hyperparameters of one network. Fields a family does not use are zero
/// and serialize as empty values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub family: Family,
    pub uq: UqMethod,
    pub cnn_blocks: usize,
    pub filters: [usize; 3],
    pub kernels: [usize; 3],
    pub max_pool: usize,
    pub lstm_layers: usize,
    pub units: [usize; 3],
    pub batch_size: usize,
    pub dropout_rate: f64,
}

/// Every serialized key, in order.
pub const CONFIG_KEYS: [&str; 16] = [
    "family", "uq", "cnn_blocks", "f1", "f2", "f3", "k1", "k2", "k3", "max_pool", "lstm_layers", "u1", "u2", "u3",
    "batch_size", "dropout_rate",
];

fn check(name: &str, v: usize, (lo, hi): (usize, usize)) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(ArchError::InvalidConfig(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

impl ModelConfig {
    pub fn cnn(filters: &[usize], kernels: &[usize], max_pool: usize) -> Self {
        let mut c = Self::empty(Family::Cnn);
        c.cnn_blocks = filters.len();
        c.filters[..filters.len()].copy_from_slice(filters);
        c.kernels[..kernels.len()].copy_from_slice(kernels);
        c.max_pool = max_pool;
        c
    }

    pub fn lstm(units: &[usize]) -> Self {
        let mut c = Self::empty(Family::Lstm);
        c.lstm_layers = units.len();
        c.units[..units.len()].copy_from_slice(units);
        c
    }

    pub fn cnn_lstm(filters: &[usize], kernels: &[usize], max_pool: usize, units: &[usize]) -> Self {
        let mut c = Self::cnn(filters, kernels, max_pool);
        c.family = Family::CnnLstm;
        c.lstm_layers = units.len();
        c.units[..units.len()].copy_from_slice(units);
        c
    }

    pub fn fixed(family: Family) -> Self {
        let mut c = Self::empty(family);
        c.dropout_rate = FIXED_DROPOUT_RATE;
        c
    }

    fn empty(family: Family) -> Self {
        Self {
            family,
            uq: UqMethod::None,
            cnn_blocks: 0,
            filters: [0; 3],
            kernels: [0; 3],
            max_pool: 0,
            lstm_layers: 0,
            units: [0; 3],
            batch_size: 32,
            dropout_rate: 0.0,
        }
    }

    pub fn with_uq(mut self, uq: UqMethod, dropout_rate: f64) -> Self {
        self.uq = uq;
        self.dropout_rate = dropout_rate;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check("batch_size", self.batch_size, ranges::BATCH)?;
        let (lo, hi) = ranges::DROPOUT;
        if !(lo..=hi).contains(&self.dropout_rate) {
            return Err(ArchError::InvalidConfig(format!("dropout_rate = {} outside [{lo}, {hi}]", self.dropout_rate)));
        }
        if self.family.has_cnn_blocks() {
            check("cnn_blocks", self.cnn_blocks, ranges::BLOCKS)?;
            for i in 0..self.cnn_blocks {
                check(&format!("f{}", i + 1), self.filters[i], ranges::FILTERS)?;
                check(&format!("k{}", i + 1), self.kernels[i], ranges::KERNEL)?;
            }
            check("max_pool", self.max_pool, ranges::POOL)?;
        }
        if self.family.has_lstm() {
            check("lstm_layers", self.lstm_layers, ranges::LSTM_LAYERS)?;
            for i in 0..self.lstm_layers {
                check(&format!("u{}", i + 1), self.units[i], ranges::CELLS)?;
            }
        }
        Ok(())
    }

    /// Drops values the family does not use, so equal networks compare equal.
    pub fn normalized(&self) -> Self {
        let mut c = self.clone();
        let blocks = if c.family.has_cnn_blocks() { c.cnn_blocks.min(3) } else { 0 };
        let layers = if c.family.has_lstm() { c.lstm_layers.min(3) } else { 0 };
        c.cnn_blocks = blocks;
        for i in blocks..3 {
            c.filters[i] = 0;
            c.kernels[i] = 0;
        }
        if blocks == 0 {
            c.max_pool = 0;
        }
        c.lstm_layers = layers;
        for i in layers..3 {
            c.units[i] = 0;
        }
        c
    }

    /// `(key, value)` pairs in canonical order; unused fields are empty.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let c = self.normalized();
        let opt = |v: usize| if v == 0 { String::new() } else { v.to_string() };
        let mut out = vec![("family", c.family.to_string()), ("uq", c.uq.to_string()), ("cnn_blocks", opt(c.cnn_blocks))];
        for (i, key) in ["f1", "f2", "f3"].into_iter().enumerate() {
            out.push((key, opt(c.filters[i])));
        }
        for (i, key) in ["k1", "k2", "k3"].into_iter().enumerate() {
            out.push((key, opt(c.kernels[i])));
        }
        out.push(("max_pool", opt(c.max_pool)));
        out.push(("lstm_layers", opt(c.lstm_layers)));
        for (i, key) in ["u1", "u2", "u3"].into_iter().enumerate() {
            out.push((key, opt(c.units[i])));
        }
        out.push(("batch_size", c.batch_size.to_string()));
        out.push(("dropout_rate", format!("{:?}", c.dropout_rate)));
        out
    }

    pub fn to_kv(&self) -> KvSection {
        let mut s = KvSection::default();
        for (k, v) in self.to_pairs() {
            s.push(k, v);
        }
        s
    }

    /// Reads the config keys from `s`, ignoring any other keys.
    pub fn from_kv(s: &KvSection) -> Result<Self> {
        let num = |key: &str| -> Result<usize> {
            match s.get(key) {
                None | Some("") => Ok(0),
                Some(v) => v.parse().map_err(|_| KvError::BadValue { key: key.into(), value: v.into() }.into()),
            }
        };
        let family: Family = s.require("family")?.parse()?;
        let uq = match s.get("uq") {
            None | Some("") => UqMethod::None,
            Some(v) => v.parse()?,
        };
        let dropout_rate = match s.get("dropout_rate") {
            None | Some("") => 0.0,
            Some(v) => v.parse().map_err(|_| KvError::BadValue { key: "dropout_rate".into(), value: v.into() })?,
        };
        let c = Self {
            family,
            uq,
            cnn_blocks: num("cnn_blocks")?,
            filters: [num("f1")?, num("f2")?, num("f3")?],
            kernels: [num("k1")?, num("k2")?, num("k3")?],
            max_pool: num("max_pool")?,
            lstm_layers: num("lstm_layers")?,
            units: [num("u1")?, num("u2")?, num("u3")?],
            batch_size: num("batch_size")?,
            dropout_rate,
        };
        Ok(c.normalized())
    }

    /// Compact description such as `{f1:16, k1:7} {u1:41}`.
    pub fn describe(&self) -> String {
        let c = self.normalized();
        let mut parts = Vec::new();
        if c.cnn_blocks > 0 {
            let f: Vec<String> = (0..c.cnn_blocks).map(|i| format!("f{}:{}", i + 1, c.filters[i])).collect();
            let k: Vec<String> = (0..c.cnn_blocks).map(|i| format!("k{}:{}", i + 1, c.kernels[i])).collect();
            parts.push(format!("{{{}, {}, pool:{}}}", f.join(", "), k.join(", "), c.max_pool));
        }
        if c.lstm_layers > 0 {
            let u: Vec<String> = (0..c.lstm_layers).map(|i| format!("u{}:{}", i + 1, c.units[i])).collect();
            parts.push(format!("{{{}}}", u.join(", ")));
        }
        if parts.is_empty() {
            parts.push(c.family.to_string());
        }
        parts.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_roundtrip_keeps_inactive_keys_empty() {
        let c = ModelConfig::cnn(&[16], &[7], 2).with_uq(UqMethod::McDropout, 0.42);
        let kv = c.to_kv();
        assert_eq!(kv.entries.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(), CONFIG_KEYS);
        assert_eq!(kv.get("f2"), Some(""));
        assert_eq!(kv.get("u1"), Some(""));
        assert_eq!(ModelConfig::from_kv(&kv).unwrap(), c);
    }

    #[test]
    fn ranges_enforced() {
        assert!(ModelConfig::cnn(&[16], &[7], 2).validate().is_ok());
        let mut c = ModelConfig::cnn(&[16], &[7], 2);
        c.cnn_blocks = 4;
        assert!(matches!(c.validate(), Err(ArchError::InvalidConfig(_))));
        assert!(ModelConfig::lstm(&[4]).validate().is_err());
        assert!(ModelConfig::cnn_lstm(&[26], &[9], 2, &[]).validate().is_err());
        assert!(ModelConfig::cnn(&[16], &[7], 2).with_uq(UqMethod::McDropout, 0.6).validate().is_err());
        assert!(ModelConfig::fixed(Family::Resnet).validate().is_ok());
    }
}
