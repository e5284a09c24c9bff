use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use super::settings::{
    EvaluateSettings, GenerateSettings, PrepareSettings, ReportSettings, RunConfig, SearchSettings, SelectSettings,
    TrainSettings, Windowing,
};
use super::svg::{bar_chart, reliability_diagram, scatter_by_outcome};
use super::{create_dir, read_text, write_text, CliError, Result, RUN_CONFIG_FILE};
use crate::arch::{build, load_checkpoint, save_checkpoint, InputShape, ModelConfig, Network, CONFIG_KEYS};
use crate::data::{
    fit_stats, load_log, read_dataset, read_manifest, select_channels, slide_windows, split_logs, standardize,
    subsample, synth_generate, trim_idle, write_dataset, write_log_csv, write_manifest, GeneratorPlan, SequenceDataset,
    SplitTag, TimeSeriesLog,
};
use crate::hpo::{render_trial_csv, run_bohb, BohbSettings, ConfigSpace, Evaluation, Objective, Status};
use crate::kv::{KvDoc, KvSection};
use crate::metrics::{entropy_by_outcome, predictive_posterior, rank_sum_greater, select, EvalReport};
use crate::train::{dataset_tensor, train, TrainOptions};

/// Runs one command and writes its run config next to the outputs.
pub fn execute(cfg: &RunConfig) -> Result<()> {
    match cfg {
        RunConfig::Generate(s) => generate(s)?,
        RunConfig::Prepare(s) => prepare(s)?,
        RunConfig::Train(s) => train_cmd(s)?,
        RunConfig::Search(s) => search(s)?,
        RunConfig::Evaluate(s) => evaluate(s)?,
        RunConfig::Select(s) => select_cmd(s)?,
        RunConfig::Report(s) => report(s)?,
    }
    write_text(&cfg.out().join(RUN_CONFIG_FILE), &cfg.render())
}

fn generate(s: &GenerateSettings) -> Result<()> {
    let mut plan = match &s.spec {
        Some(p) => GeneratorPlan::from_kv(&KvDoc::parse(&read_text(p)?)?)?,
        None => GeneratorPlan::default(),
    };
    if let Some(seed) = s.seed {
        plan.seed = seed;
    }
    let logs: Vec<TimeSeriesLog> = plan.expand()?.iter().map(synth_generate).collect::<Result<_, _>>()?;
    create_dir(&s.out.join("logs"))?;
    let mut entries = Vec::with_capacity(logs.len());
    for log in &logs {
        let rel = format!("logs/{}.csv", log.log_id);
        write_log_csv(log, &s.out.join(&rel))?;
        entries.push(rel);
    }
    write_manifest(&s.out.join("manifest.txt"), &entries)?;
    write_text(&s.out.join("plan.txt"), &plan.to_kv().render())?;
    eprintln!("generated {} logs in {}", logs.len(), s.out.display());
    Ok(())
}

fn windows_of(log: &TimeSeriesLog, w: Windowing) -> Result<SequenceDataset> {
    Ok(match w {
        Windowing::Sliding { window, step } => slide_windows(log, window, step)?,
        Windowing::Subsample { factor, target_length } => subsample(log, factor, target_length)?,
    })
}

fn prepare(s: &PrepareSettings) -> Result<()> {
    let mut logs = Vec::new();
    for path in read_manifest(&s.manifest)? {
        let log = load_log(&path)?;
        let trimmed = trim_idle(&log, s.idle_threshold, s.idle_min_gap_s)?;
        logs.push(select_channels(&trimmed, s.channels)?);
    }
    let split = split_logs(&logs, s.test_fraction, s.val_fraction, s.seed)?;
    let mut sets = Vec::with_capacity(3);
    for (tag, ids) in [(SplitTag::Train, &split.train), (SplitTag::Val, &split.val), (SplitTag::Test, &split.test)] {
        let mut ds: Option<SequenceDataset> = None;
        for log in logs.iter().filter(|l| ids.contains(&l.log_id)) {
            let w = windows_of(log, s.windowing)?;
            match &mut ds {
                None => ds = Some(w),
                Some(d) => d.extend(w)?,
            }
        }
        let ds = ds.filter(|d| !d.is_empty()).ok_or_else(|| {
            CliError::Usage(format!("the {} split has no windows; use shorter windows or more logs", tag.as_str()))
        })?;
        sets.push((tag, ids, ds.with_split(tag)));
    }
    let stats = fit_stats(&sets[0].2)?;
    let standardized: Vec<SequenceDataset> =
        sets.iter().map(|(_, _, d)| standardize(d, &stats)).collect::<Result<_, _>>()?;

    create_dir(&s.out)?;
    let mut summary = KvSection::default();
    summary.push("channels", standardized[0].channel_names.join(","));
    summary.push("window_length", standardized[0].window_length);
    summary.push("generation", standardized[0].generation.render());
    for ((tag, ids, _), ds) in sets.iter().zip(&standardized) {
        let name = tag.as_str();
        write_dataset(ds, &s.out.join(format!("{name}.ds")))?;
        let [c0, c1] = ds.class_counts();
        summary.push(&format!("{name}.logs"), ids.join(","));
        summary.push(&format!("{name}.windows"), ds.len());
        summary.push(&format!("{name}.class0"), c0);
        summary.push(&format!("{name}.class1"), c1);
        summary.push(&format!("{name}.ties_discarded"), ds.ties_discarded);
    }
    write_text(&s.out.join("stats.txt"), &stats.to_kv().render())?;
    write_text(&s.out.join("summary.txt"), &KvDoc::from(summary).render())?;
    eprintln!(
        "prepared {} / {} / {} train/val/test windows in {}",
        standardized[0].len(),
        standardized[1].len(),
        standardized[2].len(),
        s.out.display()
    );
    Ok(())
}

fn load_split(dir: &Path, name: &str) -> Result<SequenceDataset> {
    let path = dir.join(format!("{name}.ds"));
    if !path.is_file() {
        return Err(CliError::Usage(format!("{} not found; run `uqtsc prepare` first", path.display())));
    }
    let ds = read_dataset(&path)?;
    if ds.is_empty() {
        return Err(CliError::Usage(format!("{} holds no windows", path.display())));
    }
    Ok(ds)
}

fn input_shape(ds: &SequenceDataset) -> InputShape {
    InputShape { channels: ds.channels(), length: ds.window_length }
}

fn train_cmd(s: &TrainSettings) -> Result<()> {
    let train_ds = load_split(&s.data, "train")?;
    let val_ds = load_split(&s.data, "val")?;
    let doc = KvDoc::parse(&read_text(&s.model)?)?;
    doc.root().check_keys(&CONFIG_KEYS)?;
    let config = ModelConfig::from_kv(doc.root())?;
    config.validate()?;
    let mut net = build(&config, input_shape(&train_ds), s.seed)?;
    create_dir(&s.out)?;
    let opts = TrainOptions { epochs: s.epochs, lr: s.lr, seed: s.seed };
    let history = train(&mut net, &train_ds, &val_ds, &opts, |r| {
        eprintln!("epoch {:>3}  train {:.4}  val {:.4}  val wF1 {:.4}", r.epoch, r.train_loss, r.val_loss, r.val_weighted_f1);
    })?;
    let variational = net.has_variational_layers();
    let mut log = String::from("epoch,train_loss,val_loss,val_wF1");
    if variational {
        log.push_str(",kl");
    }
    log.push('\n');
    for r in &history {
        let _ = write!(log, "{},{:?},{:?},{:?}", r.epoch, r.train_loss, r.val_loss, r.val_weighted_f1);
        if let Some(kl) = r.kl {
            let _ = write!(log, ",{kl:?}");
        }
        log.push('\n');
    }
    write_text(&s.out.join("train_log.csv"), &log)?;
    save_checkpoint(&net, &s.out.join("model.ckpt"))?;
    Ok(())
}

/// Train-then-validate objective. Keeps the networks of the best
/// full-budget trials so the incumbent can be saved without retraining.
struct TrainObjective<'a> {
    train: &'a SequenceDataset,
    val: &'a SequenceDataset,
    input: InputShape,
    lr: f64,
    max_budget: usize,
    timing: bool,
    best: Mutex<(f64, BTreeMap<u64, Network>)>,
}

impl Objective<ModelConfig> for TrainObjective<'_> {
    fn evaluate(&self, config: &ModelConfig, budget: usize, seed: u64) -> Evaluation {
        let start = Instant::now();
        let outcome = build(config, self.input, seed).map_err(|e| e.to_string()).and_then(|mut net| {
            let opts = TrainOptions { epochs: budget, lr: self.lr, seed };
            let history = train(&mut net, self.train, self.val, &opts, |_| {}).map_err(|e| e.to_string())?;
            let last = history.last().ok_or("no epochs")?;
            Ok((net, last.val_loss, last.val_weighted_f1))
        });
        let wall = if self.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        match outcome {
            Ok((net, loss, f1)) => {
                if budget == self.max_budget {
                    let mut best = self.best.lock().unwrap();
                    // Ties are all kept; the search picks among them by trial order.
                    if loss < best.0 {
                        best.0 = loss;
                        best.1.clear();
                    }
                    if loss <= best.0 {
                        best.1.insert(seed, net);
                    }
                }
                Evaluation::ok(loss, f1).with_wall_seconds(wall)
            }
            Err(reason) => {
                eprintln!("trial failed ({}): {reason}", config.describe());
                Evaluation::failed().with_wall_seconds(wall)
            }
        }
    }
}

fn search(s: &SearchSettings) -> Result<()> {
    let train_ds = load_split(&s.data, "train")?;
    let val_ds = load_split(&s.data, "val")?;
    let space = match &s.space {
        Some(p) => ConfigSpace::parse(&read_text(p)?)?,
        None => ConfigSpace::full(s.family, s.uq)?,
    };
    if space.family != s.family || space.uq != s.uq {
        return Err(CliError::Usage(format!(
            "space file is for {}/{} but the run asks for {}/{}",
            space.family, space.uq, s.family, s.uq
        )));
    }
    let settings = BohbSettings {
        min_budget: s.min_budget,
        max_budget: s.max_budget,
        eta: s.eta,
        iterations: s.iterations,
        mode: s.iteration_mode,
        seed: s.seed,
        workers: s.workers.max(1),
        ..BohbSettings::default()
    };
    let objective = TrainObjective {
        train: &train_ds,
        val: &val_ds,
        input: input_shape(&train_ds),
        lr: s.lr,
        max_budget: s.max_budget,
        timing: s.timing,
        best: Mutex::new((f64::INFINITY, BTreeMap::new())),
    };
    create_dir(&s.out)?;
    write_text(&s.out.join("space.txt"), &space.render())?;
    let result = run_bohb(&space, &objective, &settings, |t| {
        let loss = if t.status == Status::Ok { format!("{:.4}", t.val_loss) } else { "failed".into() };
        eprintln!(
            "trial {:>3}  bracket {:>2}  rung {}  {:>2} epochs  val loss {loss}  {}",
            t.id,
            t.bracket,
            t.rung,
            t.budget,
            t.config.describe()
        );
    })?;
    write_text(&s.out.join("trials.csv"), &render_trial_csv(&result.trials, &CONFIG_KEYS, ModelConfig::to_pairs))?;
    let incumbent = result.incumbent().ok_or(CliError::NoIncumbent)?;
    let mut best = objective.best.into_inner().unwrap();
    let net = best.1.remove(&incumbent.seed).ok_or(CliError::NoIncumbent)?;
    save_checkpoint(&net, &s.out.join("incumbent.ckpt"))?;
    let mut summary = incumbent.config.to_kv();
    summary.entries.insert(0, ("trial_id".into(), incumbent.id.to_string()));
    summary.push("val_loss", format!("{:?}", incumbent.val_loss));
    summary.push("val_wF1", format!("{:?}", incumbent.val_score));
    summary.push("total_epochs", result.total_epochs());
    write_text(&s.out.join("incumbent.txt"), &KvDoc::from(summary).render())?;
    eprintln!("incumbent: trial {} {} (val loss {:.4})", incumbent.id, incumbent.config.describe(), incumbent.val_loss);
    Ok(())
}

fn evaluate(s: &EvaluateSettings) -> Result<()> {
    let net = load_checkpoint(&s.checkpoint)?;
    let data_path = if s.data.is_dir() { s.data.join("test.ds") } else { s.data.clone() };
    let ds = read_dataset(&data_path)?;
    if ds.is_empty() {
        return Err(CliError::Usage(format!("{} holds no windows", data_path.display())));
    }
    let want = net.input;
    if ds.channels() != want.channels || ds.window_length != want.length {
        return Err(CliError::CheckpointMismatch {
            model: format!("{} channels x {} steps", want.channels, want.length),
            data: format!("{} channels x {} steps", ds.channels(), ds.window_length),
        });
    }
    let (x, labels) = dataset_tensor(&ds)?;
    let dists = predictive_posterior(&net, &x, s.samples, s.seed, s.workers)?;
    let means: Vec<[f64; 2]> = dists.iter().map(|d| d.mean).collect();
    let labels: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
    let ids: Vec<String> = ds.windows.iter().map(|w| format!("{}@{}", w.source_log_id, w.start_index)).collect();
    let report = EvalReport::from_predictions(ids, &means, &labels, s.bins, s.ece_mode)?
        .with_meta("family", net.config.family)
        .with_meta("uq", net.config.uq)
        .with_meta("config", net.config.describe())
        .with_meta("checkpoint", s.checkpoint.display())
        .with_meta("dataset", data_path.display())
        .with_meta("samples", s.samples);
    create_dir(&s.out)?;
    write_text(&s.out.join("report.csv"), &report.to_csv())?;
    let a = &report.aggregates;
    eprintln!(
        "n {}  accuracy {:.4}  F1 {:.4}/{:.4}  weighted F1 {:.4}  entropy {:.4}  ECE {:.4}",
        a.n, a.accuracy, a.f1[0], a.f1[1], a.weighted_f1, a.mean_entropy, a.ece
    );
    Ok(())
}

fn load_reports(paths: &[PathBuf]) -> Result<Vec<EvalReport>> {
    if paths.is_empty() {
        return Err(CliError::Usage("no report files given".into()));
    }
    paths
        .iter()
        .map(|p| {
            EvalReport::parse_csv(&read_text(p)?).map_err(|e| match e {
                crate::metrics::MetricsError::MalformedReport(m) => {
                    crate::metrics::MetricsError::MalformedReport(format!("{}: {m}", p.display())).into()
                }
                other => other.into(),
            })
        })
        .collect()
}

fn meta_or<'a>(r: &'a EvalReport, key: &str) -> &'a str {
    r.meta(key).unwrap_or("unknown")
}

fn csv_text(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn select_cmd(s: &SelectSettings) -> Result<()> {
    let reports = load_reports(&s.reports)?;
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| reports[a].aggregates.mean_entropy.total_cmp(&reports[b].aggregates.mean_entropy));
    let mut rows = vec![[
        "report", "uq", "family", "config", "entropy", "ece", "f1_cl0", "f1_cl1", "f1_weighted", "accuracy", "decision",
    ]
    .map(String::from)
    .to_vec()];
    for i in order {
        let r = &reports[i];
        let a = &r.aggregates;
        rows.push(vec![
            s.reports[i].display().to_string(),
            meta_or(r, "uq").into(),
            meta_or(r, "family").into(),
            meta_or(r, "config").into(),
            format!("{:.4}", a.mean_entropy),
            format!("{:.4}", a.ece),
            format!("{:.4}", a.f1[0]),
            format!("{:.4}", a.f1[1]),
            format!("{:.4}", a.weighted_f1),
            format!("{:.4}", a.accuracy),
            select(a.f1[0], a.f1[1], a.mean_entropy).as_str().into(),
        ]);
    }
    create_dir(&s.out)?;
    write_text(&s.out.join("selection.csv"), &csv_text(&rows))
}

fn report(s: &ReportSettings) -> Result<()> {
    let reports = load_reports(&s.reports)?;
    let names: Vec<String> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}:{}/{}", i, meta_or(r, "family"), meta_or(r, "uq")))
        .collect();

    // Per-UQ means, in first-appearance order.
    let mut by_uq: Vec<(String, Vec<&EvalReport>)> = Vec::new();
    for r in &reports {
        let uq = meta_or(r, "uq").to_string();
        match by_uq.iter_mut().find(|(k, _)| *k == uq) {
            Some((_, v)) => v.push(r),
            None => by_uq.push((uq, vec![r])),
        }
    }
    let mean = |rs: &[&EvalReport], f: fn(&EvalReport) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64;
    let ece_bars: Vec<(String, f64)> = by_uq.iter().map(|(k, rs)| (k.clone(), mean(rs, |r| r.aggregates.ece))).collect();
    let ent_bars: Vec<(String, f64)> =
        by_uq.iter().map(|(k, rs)| (k.clone(), mean(rs, |r| r.aggregates.mean_entropy))).collect();

    let mut rows = vec![[
        "report", "family", "uq", "config", "n", "accuracy", "f1_cl0", "f1_cl1", "f1_weighted", "mean_entropy", "ece",
        "entropy_correct", "entropy_errors", "ranksum_p",
    ]
    .map(String::from)
    .to_vec()];
    for (i, r) in reports.iter().enumerate() {
        let a = &r.aggregates;
        let groups = entropy_by_outcome(r);
        let (correct, errors) = (groups.correct(), groups.errors());
        let avg = |v: &[f64]| if v.is_empty() { String::new() } else { format!("{:?}", v.iter().sum::<f64>() / v.len() as f64) };
        let p = if correct.is_empty() || errors.is_empty() {
            String::new()
        } else {
            format!("{:?}", rank_sum_greater(&errors, &correct).p_value)
        };
        rows.push(vec![
            s.reports[i].display().to_string(),
            meta_or(r, "family").into(),
            meta_or(r, "uq").into(),
            meta_or(r, "config").into(),
            a.n.to_string(),
            format!("{:?}", a.accuracy),
            format!("{:?}", a.f1[0]),
            format!("{:?}", a.f1[1]),
            format!("{:?}", a.weighted_f1),
            format!("{:?}", a.mean_entropy),
            format!("{:?}", a.ece),
            avg(&correct),
            avg(&errors),
            p,
        ]);
    }

    create_dir(&s.out)?;
    let series: Vec<(&str, &EvalReport)> = names.iter().map(String::as_str).zip(&reports).collect();
    write_text(&s.out.join("reliability.svg"), &reliability_diagram(&series))?;
    write_text(&s.out.join("ece_by_uq.svg"), &bar_chart("ECE by UQ method", "ECE", &ece_bars))?;
    write_text(&s.out.join("entropy_by_uq.svg"), &bar_chart("Mean predictive entropy by UQ method", "entropy", &ent_bars))?;
    write_text(&s.out.join("entropy_scatter.svg"), &scatter_by_outcome(&series))?;
    write_text(&s.out.join("summary.csv"), &csv_text(&rows))
}
