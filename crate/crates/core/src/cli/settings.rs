use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{read_text, CliError, Result};
use crate::arch::{Family, UqMethod};
use crate::data::ChannelMode;
use crate::hpo::IterationMode;
use crate::kv::{KvDoc, KvError, KvSection};
use crate::metrics::EceMode;

/// Resolved settings of one command invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Generate(GenerateSettings),
    Prepare(PrepareSettings),
    Train(TrainSettings),
    Search(SearchSettings),
    Evaluate(EvaluateSettings),
    Select(SelectSettings),
    Report(ReportSettings),
}

fn get<T: FromStr>(s: &KvSection, key: &str) -> Result<Option<T>> {
    match s.get(key) {
        None | Some("") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| KvError::BadValue { key: key.into(), value: v.into() }.into()),
    }
}

fn need<T: FromStr>(s: &KvSection, key: &str) -> Result<T> {
    get(s, key)?.ok_or_else(|| KvError::MissingKey(key.into()).into())
}

fn or<T: FromStr>(s: &KvSection, key: &str, default: T) -> Result<T> {
    Ok(get(s, key)?.unwrap_or(default))
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

fn paths(s: &KvSection, key: &str) -> Vec<PathBuf> {
    s.get(key).unwrap_or("").split(',').map(str::trim).filter(|p| !p.is_empty()).map(PathBuf::from).collect()
}

fn join_paths(ps: &[PathBuf]) -> String {
    ps.iter().map(|p| path(p)).collect::<Vec<_>>().join(",")
}

fn parse_with<T>(s: &KvSection, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
    match s.get(key) {
        None | Some("") => Ok(None),
        Some(v) => f(v).map(Some).ok_or_else(|| KvError::BadValue { key: key.into(), value: v.into() }.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSettings {
    /// Generator plan file; the built-in plan when absent.
    pub spec: Option<PathBuf>,
    /// Overrides the plan's seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// How prepare cuts logs into sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Windowing {
    Sliding { window: usize, step: usize },
    Subsample { factor: usize, target_length: usize },
}

impl Windowing {
    /// Parses `400x100`.
    pub fn parse_window(s: &str) -> Option<Self> {
        let (w, st) = s.split_once('x')?;
        Some(Self::Sliding { window: w.trim().parse().ok()?, step: st.trim().parse().ok()? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSettings {
    pub manifest: PathBuf,
    pub windowing: Windowing,
    pub channels: ChannelMode,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub idle_threshold: f64,
    pub idle_min_gap_s: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl PrepareSettings {
    pub fn new(manifest: PathBuf, windowing: Windowing, channels: ChannelMode, seed: u64, out: PathBuf) -> Self {
        Self {
            manifest,
            windowing,
            channels,
            test_fraction: 0.3,
            val_fraction: 0.2,
            idle_threshold: 0.05,
            idle_min_gap_s: 1.0,
            seed,
            out,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    /// Directory holding `train.ds` and `val.ds`.
    pub data: PathBuf,
    /// Model config file.
    pub model: PathBuf,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub data: PathBuf,
    /// Search-space file; otherwise the full space of `family` and `uq`.
    pub space: Option<PathBuf>,
    pub family: Family,
    pub uq: UqMethod,
    pub iterations: usize,
    pub min_budget: usize,
    pub max_budget: usize,
    pub eta: usize,
    pub iteration_mode: IterationMode,
    pub lr: f64,
    pub seed: u64,
    pub workers: usize,
    /// Record wall-clock seconds in the trial log (makes it run-dependent).
    pub timing: bool,
    pub out: PathBuf,
}

impl SearchSettings {
    pub fn new(data: PathBuf, family: Family, uq: UqMethod, iterations: usize, seed: u64, out: PathBuf) -> Self {
        Self {
            data,
            space: None,
            family,
            uq,
            iterations,
            min_budget: 16,
            max_budget: 50,
            eta: 3,
            iteration_mode: IterationMode::FullSweep,
            lr: 0.01,
            seed,
            workers: 1,
            timing: false,
            out,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSettings {
    pub checkpoint: PathBuf,
    /// A dataset file, or a prepared directory (its `test.ds` is used).
    pub data: PathBuf,
    pub samples: usize,
    pub bins: usize,
    pub ece_mode: EceMode,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectSettings {
    pub reports: Vec<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSettings {
    pub reports: Vec<PathBuf>,
    pub out: PathBuf,
}

fn ece_mode_str(m: EceMode) -> &'static str {
    match m {
        EceMode::Confidence => "confidence",
        EceMode::PositiveClass => "positive_class",
    }
}

pub(crate) fn parse_ece_mode(s: &str) -> Option<EceMode> {
    match s {
        "confidence" => Some(EceMode::Confidence),
        "positive_class" => Some(EceMode::PositiveClass),
        _ => None,
    }
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Generate(_) => "generate",
            Self::Prepare(_) => "prepare",
            Self::Train(_) => "train",
            Self::Search(_) => "search",
            Self::Evaluate(_) => "evaluate",
            Self::Select(_) => "select",
            Self::Report(_) => "report",
        }
    }

    pub fn out(&self) -> &Path {
        match self {
            Self::Generate(s) => &s.out,
            Self::Prepare(s) => &s.out,
            Self::Train(s) => &s.out,
            Self::Search(s) => &s.out,
            Self::Evaluate(s) => &s.out,
            Self::Select(s) => &s.out,
            Self::Report(s) => &s.out,
        }
    }

    pub fn set_out(&mut self, out: PathBuf) {
        match self {
            Self::Generate(s) => s.out = out,
            Self::Prepare(s) => s.out = out,
            Self::Train(s) => s.out = out,
            Self::Search(s) => s.out = out,
            Self::Evaluate(s) => s.out = out,
            Self::Select(s) => s.out = out,
            Self::Report(s) => s.out = out,
        }
    }

    fn keys(command: &str) -> Option<&'static [&'static str]> {
        Some(match command {
            "generate" => &["command", "spec", "seed", "out"],
            "prepare" => &[
                "command", "manifest", "window", "subsample", "target_length", "channels", "test_fraction",
                "val_fraction", "idle_threshold", "idle_min_gap_s", "seed", "out",
            ],
            "train" => &["command", "data", "model", "epochs", "lr", "seed", "out"],
            "search" => &[
                "command", "data", "space", "family", "uq", "iterations", "min_budget", "max_budget", "eta",
                "iteration_mode", "lr", "seed", "workers", "timing", "out",
            ],
            "evaluate" => &["command", "checkpoint", "data", "samples", "bins", "ece_mode", "seed", "workers", "out"],
            "select" | "report" => &["command", "reports", "out"],
            _ => return None,
        })
    }

    pub fn to_kv(&self) -> KvSection {
        let mut s = KvSection::default();
        s.push("command", self.command());
        match self {
            Self::Generate(g) => {
                s.push("spec", g.spec.as_deref().map(path).unwrap_or_default());
                s.push("seed", g.seed.map(|v| v.to_string()).unwrap_or_default());
            }
            Self::Prepare(p) => {
                s.push("manifest", path(&p.manifest));
                match p.windowing {
                    Windowing::Sliding { window, step } => s.push("window", format!("{window}x{step}")),
                    Windowing::Subsample { factor, target_length } => {
                        s.push("subsample", factor);
                        s.push("target_length", target_length);
                    }
                }
                s.push("channels", p.channels.as_str());
                s.push("test_fraction", format!("{:?}", p.test_fraction));
                s.push("val_fraction", format!("{:?}", p.val_fraction));
                s.push("idle_threshold", format!("{:?}", p.idle_threshold));
                s.push("idle_min_gap_s", format!("{:?}", p.idle_min_gap_s));
                s.push("seed", p.seed);
            }
            Self::Train(t) => {
                s.push("data", path(&t.data));
                s.push("model", path(&t.model));
                s.push("epochs", t.epochs);
                s.push("lr", format!("{:?}", t.lr));
                s.push("seed", t.seed);
            }
            Self::Search(h) => {
                s.push("data", path(&h.data));
                s.push("space", h.space.as_deref().map(path).unwrap_or_default());
                s.push("family", h.family);
                s.push("uq", h.uq);
                s.push("iterations", h.iterations);
                s.push("min_budget", h.min_budget);
                s.push("max_budget", h.max_budget);
                s.push("eta", h.eta);
                s.push("iteration_mode", h.iteration_mode.as_str());
                s.push("lr", format!("{:?}", h.lr));
                s.push("seed", h.seed);
                s.push("workers", h.workers);
                s.push("timing", h.timing);
            }
            Self::Evaluate(e) => {
                s.push("checkpoint", path(&e.checkpoint));
                s.push("data", path(&e.data));
                s.push("samples", e.samples);
                s.push("bins", e.bins);
                s.push("ece_mode", ece_mode_str(e.ece_mode));
                s.push("seed", e.seed);
                s.push("workers", e.workers);
            }
            Self::Select(r) => s.push("reports", join_paths(&r.reports)),
            Self::Report(r) => s.push("reports", join_paths(&r.reports)),
        }
        s.push("out", path(self.out()));
        s
    }

    pub fn render(&self) -> String {
        KvDoc::from(self.to_kv()).render()
    }

    pub fn from_kv(s: &KvSection) -> Result<Self> {
        let command = s.require("command")?;
        let keys = Self::keys(command).ok_or_else(|| CliError::Usage(format!("unknown command `{command}`")))?;
        s.check_keys(keys)?;
        let out: PathBuf = need(s, "out")?;
        Ok(match command {
            "generate" => Self::Generate(GenerateSettings { spec: get(s, "spec")?, seed: get(s, "seed")?, out }),
            "prepare" => {
                let window = parse_with(s, "window", Windowing::parse_window)?;
                let factor: Option<usize> = get(s, "subsample")?;
                let windowing = match (window, factor) {
                    (Some(w), None) => w,
                    (None, Some(factor)) => Windowing::Subsample { factor, target_length: need(s, "target_length")? },
                    _ => return Err(CliError::Usage("give exactly one of `window` and `subsample`".into())),
                };
                let channels = parse_with(s, "channels", |v| v.parse().ok())?.unwrap_or(ChannelMode::Imu);
                let d = PrepareSettings::new(need(s, "manifest")?, windowing, channels, need(s, "seed")?, out);
                Self::Prepare(PrepareSettings {
                    test_fraction: or(s, "test_fraction", d.test_fraction)?,
                    val_fraction: or(s, "val_fraction", d.val_fraction)?,
                    idle_threshold: or(s, "idle_threshold", d.idle_threshold)?,
                    idle_min_gap_s: or(s, "idle_min_gap_s", d.idle_min_gap_s)?,
                    ..d
                })
            }
            "train" => Self::Train(TrainSettings {
                data: need(s, "data")?,
                model: need(s, "model")?,
                epochs: need(s, "epochs")?,
                lr: or(s, "lr", 0.01)?,
                seed: need(s, "seed")?,
                out,
            }),
            "search" => {
                let family = parse_with(s, "family", |v| v.parse().ok())?.unwrap_or(Family::Cnn);
                let uq = parse_with(s, "uq", |v| v.parse().ok())?.unwrap_or(UqMethod::McDropout);
                let d = SearchSettings::new(need(s, "data")?, family, uq, need(s, "iterations")?, need(s, "seed")?, out);
                Self::Search(SearchSettings {
                    space: get(s, "space")?,
                    min_budget: or(s, "min_budget", d.min_budget)?,
                    max_budget: or(s, "max_budget", d.max_budget)?,
                    eta: or(s, "eta", d.eta)?,
                    iteration_mode: parse_with(s, "iteration_mode", IterationMode::parse)?.unwrap_or_default(),
                    lr: or(s, "lr", d.lr)?,
                    workers: or(s, "workers", d.workers)?,
                    timing: or(s, "timing", false)?,
                    ..d
                })
            }
            "evaluate" => Self::Evaluate(EvaluateSettings {
                checkpoint: need(s, "checkpoint")?,
                data: need(s, "data")?,
                samples: or(s, "samples", 10)?,
                bins: or(s, "bins", 10)?,
                ece_mode: parse_with(s, "ece_mode", parse_ece_mode)?.unwrap_or_default(),
                seed: need(s, "seed")?,
                workers: or(s, "workers", 1)?,
                out,
            }),
            "select" => Self::Select(SelectSettings { reports: paths(s, "reports"), out }),
            _ => Self::Report(ReportSettings { reports: paths(s, "reports"), out }),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        if doc.sections.len() > 1 {
            return Err(CliError::Usage("run configs have no sections".into()));
        }
        Self::from_kv(doc.root())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }
}
