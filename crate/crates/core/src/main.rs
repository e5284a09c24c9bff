use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uqtsc::arch::{Family, UqMethod};
use uqtsc::cli::{
    execute, EvaluateSettings, GenerateSettings, PrepareSettings, ReportSettings, RunConfig, SearchSettings,
    SelectSettings, TrainSettings, Windowing,
};
use uqtsc::data::ChannelMode;
use uqtsc::hpo::IterationMode;
use uqtsc::metrics::EceMode;

#[derive(Parser)]
#[command(name = "uqtsc", version, about = "Uncertainty-aware terrain classification from proprioceptive time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic sensor logs and a manifest.
    Generate {
        /// Generator plan file (default: twenty 30 s logs).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trim, split, window and standardize logs into train/val/test datasets.
    Prepare(PrepareArgs),
    /// Train one model configuration.
    Train {
        /// Prepared dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Model config file (`key = value`).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// BOHB hyperparameter search; writes the trial log and incumbent checkpoint.
    Search(SearchArgs),
    /// Monte Carlo evaluation of a checkpoint on a dataset.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset file, or a prepared directory (uses its test split).
        #[arg(long)]
        data: PathBuf,
        /// Stochastic forward passes per sample.
        #[arg(long = "samples", default_value_t = 10)]
        samples: usize,
        /// Calibration bins.
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, value_parser = parse_ece_mode, default_value = "confidence")]
        ece_mode: EceMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply the F1/entropy selection gate to evaluation reports.
    Select {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plots and a summary table from evaluation reports.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a command from a written run_config.txt.
    Rerun {
        run_config: PathBuf,
        /// Write outputs here instead of the recorded directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PrepareArgs {
    /// Manifest written by `generate`.
    #[arg(long)]
    manifest: PathBuf,
    /// Sliding window as WxS, e.g. 400x100.
    #[arg(long, value_parser = parse_window, conflicts_with = "subsample")]
    window: Option<Windowing>,
    /// Keep every F-th step; needs --target-length.
    #[arg(long, requires = "target_length")]
    subsample: Option<usize>,
    #[arg(long)]
    target_length: Option<usize>,
    #[arg(long, default_value = "imu")]
    channels: ChannelMode,
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    /// Activity below this counts as idle.
    #[arg(long, default_value_t = 0.05)]
    idle_threshold: f64,
    /// Idle runs at least this long (seconds) are removed.
    #[arg(long, default_value_t = 1.0)]
    idle_min_gap_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Search-space file; defaults to the full space of --family/--uq.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, default_value = "cnn")]
    family: Family,
    #[arg(long, default_value = "mc_dropout")]
    uq: UqMethod,
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    #[arg(long, default_value_t = 16)]
    min_budget: usize,
    #[arg(long, default_value_t = 50)]
    max_budget: usize,
    #[arg(long, default_value_t = 3)]
    eta: usize,
    /// full_sweep: every iteration runs all brackets; single_bracket: one per iteration.
    #[arg(long, value_parser = parse_iteration_mode, default_value = "full_sweep")]
    iteration_mode: IterationMode,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel trials per rung.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Record wall-clock seconds in the trial log.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_window(s: &str) -> Result<Windowing, String> {
    Windowing::parse_window(s).ok_or_else(|| format!("expected WxS such as 400x100, got `{s}`"))
}

fn parse_iteration_mode(s: &str) -> Result<IterationMode, String> {
    IterationMode::parse(s).ok_or_else(|| format!("expected full_sweep or single_bracket, got `{s}`"))
}

fn parse_ece_mode(s: &str) -> Result<EceMode, String> {
    match s {
        "confidence" => Ok(EceMode::Confidence),
        "positive_class" => Ok(EceMode::PositiveClass),
        _ => Err(format!("expected confidence or positive_class, got `{s}`")),
    }
}

fn resolve(command: Command) -> Result<RunConfig, uqtsc::cli::CliError> {
    Ok(match command {
        Command::Generate { spec, seed, out } => RunConfig::Generate(GenerateSettings { spec, seed, out }),
        Command::Prepare(a) => {
            let windowing = match (a.window, a.subsample, a.target_length) {
                (Some(w), None, _) => w,
                (None, Some(factor), Some(target_length)) => Windowing::Subsample { factor, target_length },
                _ => return Err(uqtsc::cli::CliError::Usage("give --window WxS or --subsample F --target-length N".into())),
            };
            RunConfig::Prepare(PrepareSettings {
                test_fraction: a.test_fraction,
                val_fraction: a.val_fraction,
                idle_threshold: a.idle_threshold,
                idle_min_gap_s: a.idle_min_gap_s,
                ..PrepareSettings::new(a.manifest, windowing, a.channels, a.seed, a.out)
            })
        }
        Command::Train { data, model, epochs, lr, seed, out } => {
            RunConfig::Train(TrainSettings { data, model, epochs, lr, seed, out })
        }
        Command::Search(a) => {
            let (mut family, mut uq) = (a.family, a.uq);
            if let Some(path) = &a.space {
                // The space file names its own family and method.
                let text = std::fs::read_to_string(path)
                    .map_err(|source| uqtsc::cli::CliError::Io { path: path.clone(), source })?;
                let space = uqtsc::hpo::ConfigSpace::parse(&text)?;
                (family, uq) = (space.family, space.uq);
            }
            RunConfig::Search(SearchSettings {
                space: a.space,
                min_budget: a.min_budget,
                max_budget: a.max_budget,
                eta: a.eta,
                iteration_mode: a.iteration_mode,
                lr: a.lr,
                workers: a.workers,
                timing: a.timing,
                ..SearchSettings::new(a.data, family, uq, a.iterations, a.seed, a.out)
            })
        }
        Command::Evaluate { checkpoint, data, samples, bins, ece_mode, seed, workers, out } => {
            RunConfig::Evaluate(EvaluateSettings { checkpoint, data, samples, bins, ece_mode, seed, workers, out })
        }
        Command::Select { reports, out } => RunConfig::Select(SelectSettings { reports, out }),
        Command::Report { reports, out } => RunConfig::Report(ReportSettings { reports, out }),
        Command::Rerun { run_config, out } => {
            let mut cfg = RunConfig::load(&run_config)?;
            if let Some(out) = out {
                cfg.set_out(out);
            }
            cfg
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resolve(cli.command).and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
