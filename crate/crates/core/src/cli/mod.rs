//! The `uqtsc` command suite. Each command is described by a flat
//! `key = value` run config, written next to its outputs as
//! `run_config.txt`; running that file again reproduces the outputs.

mod commands;
mod settings;
mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::execute;
pub use settings::{
    EvaluateSettings, GenerateSettings, PrepareSettings, ReportSettings, RunConfig, SearchSettings, SelectSettings,
    TrainSettings, Windowing,
};
pub use svg::{bar_chart, reliability_diagram, scatter_by_outcome};

pub const RUN_CONFIG_FILE: &str = "run_config.txt";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint expects {model} but the dataset has {data}")]
    CheckpointMismatch { model: String, data: String },
    #[error("search produced no successful full-budget trial")]
    NoIncumbent,
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Arch(#[from] crate::arch::ArchError),
    #[error(transparent)]
    Train(#[from] crate::train::TrainError),
    #[error(transparent)]
    Hpo(#[from] crate::hpo::HpoError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
