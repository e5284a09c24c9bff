//! Predictive posterior, entropy, calibration, F1 scores, the candidate
//! selection gate, and per-sample evaluation reports.

mod ece;
mod entropy;
mod f1;
mod posterior;
mod ranksum;
mod report;
mod select;

use thiserror::Error;

pub use ece::{bin_index, ece, Bin, EceMode};
pub use entropy::predictive_entropy;
pub use f1::{f1_and_accuracy, outcome, ClassScores, Outcome};
pub use posterior::{predictive_posterior, PredictiveDistribution};
pub use ranksum::{rank_sum_greater, RankSum};
pub use report::{entropy_by_outcome, Aggregates, EvalReport, OutcomeEntropies, SampleRow};
pub use select::{select, select_candidates, Decision, ENTROPY_THRESHOLD, F1_THRESHOLD};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bin count must be at least 1")]
    InvalidBins,
    #[error("sample count must be at least 1")]
    InvalidSamples,
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Arch(#[from] crate::arch::ArchError),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;
