use rand::Rng as _;

use super::{HpoError, Result};
use crate::arch::{ranges, Family, ModelConfig, UqMethod, FIXED_DROPOUT_RATE};
use crate::kv::{KvDoc, KvSection};
use crate::rng::Rng;

/// One searchable parameter. Points live in the unit cube; `lo..=hi` is the
/// parameter's own scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dim {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

impl Dim {
    pub fn int(name: &str, (lo, hi): (usize, usize)) -> Self {
        Self { name: name.to_string(), lo: lo as f64, hi: hi as f64, integer: true }
    }

    pub fn real(name: &str, (lo, hi): (f64, f64)) -> Self {
        Self { name: name.to_string(), lo, hi, integer: false }
    }

    pub fn value(&self, u: f64) -> f64 {
        let v = self.lo + u.clamp(0.0, 1.0) * (self.hi - self.lo);
        if self.integer {
            v.round()
        } else {
            v
        }
    }

    pub fn unit(&self, v: f64) -> f64 {
        ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    /// Clips to the unit interval and, for integers, moves to the nearest
    /// grid point.
    pub fn snap(&self, u: f64) -> f64 {
        let u = if u.is_nan() { 0.5 } else { u.clamp(0.0, 1.0) };
        if self.integer {
            self.unit(self.value(u))
        } else {
            u
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        if self.integer {
            let v = rng.random_range(self.lo as i64..=self.hi as i64);
            self.unit(v as f64)
        } else {
            rng.random::<f64>()
        }
    }
}

/// A conditional box of parameters. Inactive coordinates of a point are NaN.
pub trait SearchSpace {
    type Config;

    fn dims(&self) -> &[Dim];

    /// Activity of every dim given the conditioning values in `point`.
    fn active(&self, point: &[f64]) -> Vec<bool>;

    /// Dims whose activity depends on other dims.
    fn conditional(&self) -> Vec<bool> {
        vec![false; self.dims().len()]
    }

    fn decode(&self, point: &[f64]) -> Self::Config;
}

/// Snaps every coordinate onto the grid and blanks inactive ones.
pub fn canonicalize<S: SearchSpace + ?Sized>(space: &S, point: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = space.dims().iter().zip(point).map(|(d, &u)| d.snap(u)).collect();
    for (v, on) in p.iter_mut().zip(space.active(point)) {
        if !on {
            *v = f64::NAN;
        }
    }
    p
}

/// Uniform over the active parameters given the sampled conditioning values.
pub fn sample_random<S: SearchSpace + ?Sized>(space: &S, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = space.dims().iter().map(|d| d.sample(rng)).collect();
    canonicalize(space, &raw)
}

/// `x ∈ [0, 1]`, unconditional. Used for toy objectives.
#[derive(Debug, Clone)]
pub struct UnitInterval {
    dims: [Dim; 1],
}

impl Default for UnitInterval {
    fn default() -> Self {
        Self { dims: [Dim::real("x", (0.0, 1.0))] }
    }
}

impl SearchSpace for UnitInterval {
    type Config = f64;

    fn dims(&self) -> &[Dim] {
        &self.dims
    }

    fn active(&self, _: &[f64]) -> Vec<bool> {
        vec![true]
    }

    fn decode(&self, point: &[f64]) -> f64 {
        self.dims[0].value(point[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Blocks,
    Filter(usize),
    Kernel(usize),
    Pool,
    Layers,
    Units(usize),
    Batch,
    Dropout,
}

/// Keys accepted in a search-space file.
pub const SPACE_KEYS: [&str; 10] =
    ["family", "uq", "cnn_blocks", "filters", "kernel", "max_pool", "lstm_layers", "cells", "batch_size", "dropout_rate"];

/// Network hyperparameters for one family and UQ method. Each range is a
/// subset of the full configuration space; a range with `lo == hi` is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    pub family: Family,
    pub uq: UqMethod,
    pub cnn_blocks: (usize, usize),
    pub filters: (usize, usize),
    pub kernel: (usize, usize),
    pub max_pool: (usize, usize),
    pub lstm_layers: (usize, usize),
    pub cells: (usize, usize),
    pub batch_size: (usize, usize),
    pub dropout_rate: (f64, f64),
    dims: Vec<Dim>,
    slots: Vec<Slot>,
}

fn within<T: PartialOrd + std::fmt::Display>(name: &str, (lo, hi): (T, T), (min, max): (T, T)) -> Result<()> {
    if lo > hi || lo < min || hi > max {
        return Err(HpoError::InvalidSpace(format!("{name} range {lo}..{hi} not inside {min}..{max}")));
    }
    Ok(())
}

impl ConfigSpace {
    /// The full configuration space for `family` with `uq`.
    pub fn full(family: Family, uq: UqMethod) -> Result<Self> {
        Self::new(
            family,
            uq,
            ranges::BLOCKS,
            ranges::FILTERS,
            ranges::KERNEL,
            ranges::POOL,
            ranges::LSTM_LAYERS,
            ranges::CELLS,
            ranges::BATCH,
            ranges::DROPOUT,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn new(
        family: Family,
        uq: UqMethod,
        cnn_blocks: (usize, usize),
        filters: (usize, usize),
        kernel: (usize, usize),
        max_pool: (usize, usize),
        lstm_layers: (usize, usize),
        cells: (usize, usize),
        batch_size: (usize, usize),
        dropout_rate: (f64, f64),
    ) -> Result<Self> {
        if family.is_fixed() && uq == UqMethod::McDropout {
            return Err(HpoError::InvalidSpace(format!("{family} does not support {uq}")));
        }
        within("cnn_blocks", cnn_blocks, ranges::BLOCKS)?;
        within("filters", filters, ranges::FILTERS)?;
        within("kernel", kernel, ranges::KERNEL)?;
        within("max_pool", max_pool, ranges::POOL)?;
        within("lstm_layers", lstm_layers, ranges::LSTM_LAYERS)?;
        within("cells", cells, ranges::CELLS)?;
        within("batch_size", batch_size, ranges::BATCH)?;
        within("dropout_rate", dropout_rate, ranges::DROPOUT)?;
        let mut space = Self {
            family,
            uq,
            cnn_blocks,
            filters,
            kernel,
            max_pool,
            lstm_layers,
            cells,
            batch_size,
            dropout_rate,
            dims: Vec::new(),
            slots: Vec::new(),
        };
        space.layout();
        Ok(space)
    }

    fn layout(&mut self) {
        let add = |dims: &mut Vec<Dim>, slots: &mut Vec<Slot>, dim: Dim, slot: Slot| {
            if dim.lo < dim.hi {
                dims.push(dim);
                slots.push(slot);
            }
        };
        let (mut dims, mut slots) = (Vec::new(), Vec::new());
        if self.family.has_cnn_blocks() {
            add(&mut dims, &mut slots, Dim::int("cnn_blocks", self.cnn_blocks), Slot::Blocks);
            for i in 0..self.cnn_blocks.1 {
                add(&mut dims, &mut slots, Dim::int(&format!("f{}", i + 1), self.filters), Slot::Filter(i));
                add(&mut dims, &mut slots, Dim::int(&format!("k{}", i + 1), self.kernel), Slot::Kernel(i));
            }
            add(&mut dims, &mut slots, Dim::int("max_pool", self.max_pool), Slot::Pool);
        }
        if self.family.has_lstm() {
            add(&mut dims, &mut slots, Dim::int("lstm_layers", self.lstm_layers), Slot::Layers);
            for i in 0..self.lstm_layers.1 {
                add(&mut dims, &mut slots, Dim::int(&format!("u{}", i + 1), self.cells), Slot::Units(i));
            }
        }
        add(&mut dims, &mut slots, Dim::int("batch_size", self.batch_size), Slot::Batch);
        if self.uses_dropout_rate() {
            add(&mut dims, &mut slots, Dim::real("dropout_rate", self.dropout_rate), Slot::Dropout);
        }
        self.dims = dims;
        self.slots = slots;
    }

    fn uses_dropout_rate(&self) -> bool {
        !self.family.is_fixed() && matches!(self.uq, UqMethod::McDropout | UqMethod::DropConnect)
    }

    fn slot_value(&self, point: &[f64], slot: Slot, fixed: f64) -> f64 {
        match self.slots.iter().position(|&s| s == slot) {
            Some(i) => self.dims[i].value(point[i]),
            None => fixed,
        }
    }

    fn depth(&self, point: &[f64]) -> (usize, usize) {
        let blocks = self.slot_value(point, Slot::Blocks, self.cnn_blocks.0 as f64) as usize;
        let layers = self.slot_value(point, Slot::Layers, self.lstm_layers.0 as f64) as usize;
        (blocks, layers)
    }

    /// Parses a search-space file. Missing keys keep their full range; a
    /// value is either `lo..hi` or a single fixed number.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let s = doc.root();
        s.check_keys(&SPACE_KEYS)?;
        let family: Family = s.require("family")?.parse()?;
        let uq: UqMethod = match s.get("uq") {
            Some(v) => v.parse()?,
            None => UqMethod::None,
        };
        fn range<T: std::str::FromStr + Copy>(s: &KvSection, key: &str, default: (T, T)) -> Result<(T, T)> {
            let Some(v) = s.get(key) else { return Ok(default) };
            let bad = || HpoError::InvalidSpace(format!("{key}: cannot parse `{v}`"));
            let num = |t: &str| t.trim().parse::<T>().map_err(|_| bad());
            match v.split_once("..") {
                Some((a, b)) => Ok((num(a)?, num(b)?)),
                None => {
                    let x = num(v)?;
                    Ok((x, x))
                }
            }
        }
        Self::new(
            family,
            uq,
            range(s, "cnn_blocks", ranges::BLOCKS)?,
            range(s, "filters", ranges::FILTERS)?,
            range(s, "kernel", ranges::KERNEL)?,
            range(s, "max_pool", ranges::POOL)?,
            range(s, "lstm_layers", ranges::LSTM_LAYERS)?,
            range(s, "cells", ranges::CELLS)?,
            range(s, "batch_size", ranges::BATCH)?,
            range(s, "dropout_rate", ranges::DROPOUT)?,
        )
    }

    pub fn render(&self) -> String {
        let mut s = KvSection::default();
        s.push("family", self.family);
        s.push("uq", self.uq);
        let r = |(a, b): (usize, usize)| if a == b { a.to_string() } else { format!("{a}..{b}") };
        if self.family.has_cnn_blocks() {
            s.push("cnn_blocks", r(self.cnn_blocks));
            s.push("filters", r(self.filters));
            s.push("kernel", r(self.kernel));
            s.push("max_pool", r(self.max_pool));
        }
        if self.family.has_lstm() {
            s.push("lstm_layers", r(self.lstm_layers));
            s.push("cells", r(self.cells));
        }
        s.push("batch_size", r(self.batch_size));
        if self.uses_dropout_rate() {
            let (a, b) = self.dropout_rate;
            s.push("dropout_rate", if a == b { format!("{a:?}") } else { format!("{a:?}..{b:?}") });
        }
        KvDoc::from(s).render()
    }
}

impl SearchSpace for ConfigSpace {
    type Config = ModelConfig;

    fn dims(&self) -> &[Dim] {
        &self.dims
    }

    fn active(&self, point: &[f64]) -> Vec<bool> {
        let (blocks, layers) = self.depth(point);
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Filter(i) | Slot::Kernel(i) => i < blocks,
                Slot::Units(i) => i < layers,
                _ => true,
            })
            .collect()
    }

    fn conditional(&self) -> Vec<bool> {
        self.slots.iter().map(|s| matches!(s, Slot::Filter(i) | Slot::Kernel(i) | Slot::Units(i) if *i > 0)).collect()
    }

    fn decode(&self, point: &[f64]) -> ModelConfig {
        let (blocks, layers) = self.depth(point);
        let int = |slot, fixed: (usize, usize)| self.slot_value(point, slot, fixed.0 as f64) as usize;
        let mut c = if self.family.is_fixed() {
            ModelConfig::fixed(self.family)
        } else {
            let filters: Vec<usize> = (0..blocks).map(|i| int(Slot::Filter(i), self.filters)).collect();
            let kernels: Vec<usize> = (0..blocks).map(|i| int(Slot::Kernel(i), self.kernel)).collect();
            let units: Vec<usize> = (0..layers).map(|i| int(Slot::Units(i), self.cells)).collect();
            let pool = int(Slot::Pool, self.max_pool);
            match self.family {
                Family::Cnn => ModelConfig::cnn(&filters, &kernels, pool),
                Family::Lstm => ModelConfig::lstm(&units),
                _ => ModelConfig::cnn_lstm(&filters, &kernels, pool, &units),
            }
        };
        c.uq = self.uq;
        c.batch_size = int(Slot::Batch, self.batch_size);
        c.dropout_rate = if self.family.is_fixed() {
            FIXED_DROPOUT_RATE
        } else if self.uses_dropout_rate() {
            self.slot_value(point, Slot::Dropout, self.dropout_rate.0)
        } else {
            0.0
        };
        c
    }
}
