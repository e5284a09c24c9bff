//! Sensor logs, sequence windows, splits and the synthetic log generator.

mod channels;
mod dataset;
mod io;
mod log;
mod split;
mod stats;
pub mod synth;
mod trim;
mod window;

use std::path::PathBuf;

use thiserror::Error;

pub use channels::{select_channels, select_dataset_channels, ChannelMode};
pub use dataset::{Generation, SequenceDataset, SplitTag, Window};
pub use io::{
    load_log, read_dataset, read_manifest, render_log_csv, write_dataset, write_log_csv,
    write_manifest,
};
pub use log::{Channel, ChannelGroup, TimeSeriesLog, IMU_CHANNELS, JOINT_CHANNELS};
pub use split::{split_logs, LogSplit};
pub use stats::{fit_stats, standardize, ChannelStats};
pub use synth::{synth_generate, ClassSignature, GeneratorPlan, Segment, SynthSpec};
pub use trim::{activity, trim_idle};
pub use window::{majority_label, slide_windows, subsample, window_count, window_starts};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}`")]
    UnexpectedColumn(String),
    #[error("line {0}: wrong number of fields")]
    RaggedRow(u64),
    #[error("line {line}: column `{column}` is not a finite number")]
    NonNumericValue { line: u64, column: String },
    #[error("line {0}: label must be 0 or 1")]
    InvalidLabel(u64),
    #[error("line {0}: time must be strictly increasing")]
    NonMonotonicTime(u64),
    #[error("log contains no samples")]
    EmptyLog,
    #[error("log `{0}` is idle throughout")]
    AllIdle(String),
    #[error("no decimated stream of length {stream_len} reaches {target} steps")]
    TooShort { stream_len: usize, target: usize },
    #[error("need at least 3 logs to split, got {0}")]
    TooFewLogs(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("channel group `{0}` is not present")]
    MissingGroup(&'static str),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("datasets disagree: {0}")]
    Incompatible(String),
    #[error("{path}: malformed dataset file ({reason})")]
    MalformedDataset { path: PathBuf, reason: String },
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;
