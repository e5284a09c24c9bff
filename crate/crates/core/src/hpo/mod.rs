//! BOHB: Hyperband budget scheduling driven by a kernel-density
//! configuration model.

mod bohb;
mod kde;
mod schedule;
mod space;
mod trial_log;

use thiserror::Error;

pub use bohb::{
    promote, random_search, run_bohb, successive_halving, BohbResult, BohbSettings, Evaluation, Objective, Status, Trial,
};
pub use kde::{kde_propose, KdeModel, KdeSettings};
pub use schedule::{hyperband_schedule, Bracket, HyperbandSchedule, IterationMode, Rung};
pub use space::{canonicalize, sample_random, ConfigSpace, Dim, SearchSpace, UnitInterval, SPACE_KEYS};
pub use trial_log::{render_trial_csv, TRIAL_COLUMNS};

#[derive(Debug, Error)]
pub enum HpoError {
    #[error("invalid budgets: min {min}, max {max}, eta {eta}")]
    InvalidBudgets { min: usize, max: usize, eta: usize },
    #[error("need at least {need} successful trials for a model, have {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Arch(#[from] crate::arch::ArchError),
}

pub type Result<T, E = HpoError> = std::result::Result<T, E>;
