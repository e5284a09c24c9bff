use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use uqtsc::arch::{build, save_checkpoint, InputShape, ModelConfig, UqMethod};
use uqtsc::cli::*;
use uqtsc::data::*;
use uqtsc::metrics::{f1_and_accuracy, predictive_entropy, EceMode, EvalReport, MetricsError};

const PLAN: &str = "seed = 4\nlogs = 8\nlog_duration_s = 20\nidle_probability = 0.5\nidle_s = 2\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uqtsc"))
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn generate(root: &Path, plan: &str) -> PathBuf {
    fs::write(root.join("plan.txt"), plan).unwrap();
    let out = root.join("gen");
    execute(&RunConfig::Generate(GenerateSettings { spec: Some(root.join("plan.txt")), seed: None, out: out.clone() }))
        .unwrap();
    out
}

fn prepare(root: &Path, channels: ChannelMode) -> PathBuf {
    let gen = generate(root, PLAN);
    let out = root.join(format!("prep_{}", channels.as_str()));
    let s = PrepareSettings::new(
        gen.join("manifest.txt"),
        Windowing::Sliding { window: 100, step: 50 },
        channels,
        1,
        out.clone(),
    );
    execute(&RunConfig::Prepare(s)).unwrap();
    out
}

fn subdir(root: &Path, name: &str) -> PathBuf {
    let p = root.join(name);
    fs::create_dir_all(&p).unwrap();
    p
}

fn small_cnn(uq: UqMethod) -> ModelConfig {
    ModelConfig::cnn(&[16], &[5], 2).with_uq(uq, 0.2).with_batch_size(16)
}

fn write_model(root: &Path, c: &ModelConfig) -> PathBuf {
    let p = root.join("model.txt");
    fs::write(&p, uqtsc::kv::KvDoc::from(c.to_kv()).render()).unwrap();
    p
}

#[test]
fn generate_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), PLAN);
    let manifest = read_manifest(&a.join("manifest.txt")).unwrap();
    assert_eq!(manifest.len(), 8);
    for p in &manifest {
        load_log(p).unwrap();
    }
    let b = dir.path().join("again");
    execute(&RunConfig::load(&a.join("run_config.txt")).map(|mut c| {
        c.set_out(b.clone());
        c
    }).unwrap())
    .unwrap();
    for p in &manifest {
        let name = p.file_name().unwrap();
        assert_eq!(read(p), read(b.join("logs").join(name)));
    }
    fs::write(dir.path().join("bad.txt"), "logs = 2\nlog_duration_s = 0\n").unwrap();
    let out = bin().args(["generate", "--spec"]).arg(dir.path().join("bad.txt")).arg("--out").arg(dir.path().join("x")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid synthetic spec"));
}

#[test]
fn prepare_counts_match_window_formula() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), ChannelMode::Imu);
    let gen = dir.path().join("gen");
    // Oracle: trimmed lengths and the window-count formula, log by log.
    let mut expected = 0;
    for p in read_manifest(&gen.join("manifest.txt")).unwrap() {
        let len = trim_idle(&load_log(&p).unwrap(), 0.05, 1.0).unwrap().len();
        expected += if len >= 100 { (len - 100) / 50 + 1 } else { 0 };
    }
    let sets: Vec<SequenceDataset> =
        ["train", "val", "test"].iter().map(|s| read_dataset(&prep.join(format!("{s}.ds"))).unwrap()).collect();
    let got: usize = sets.iter().map(|d| d.len() + d.ties_discarded).sum();
    assert_eq!(got, expected);
    for (i, a) in sets.iter().enumerate() {
        assert_eq!(a.channels(), 6);
        for b in &sets[i + 1..] {
            assert!(a.windows.iter().all(|w| b.windows.iter().all(|v| v.source_log_id != w.source_log_id)));
        }
    }
    // Train statistics are standardized away.
    let mean: f64 = sets[0].windows.iter().map(|w| w.data[..100].iter().sum::<f64>()).sum::<f64>() / (100 * sets[0].len()) as f64;
    assert!(mean.abs() < 1e-9);
    let fused = prepare(&subdir(dir.path(), "f"), ChannelMode::Fused);
    assert_eq!(read_dataset(&fused.join("test.ds")).unwrap().channels(), 18);
}

#[test]
fn train_logs_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), ChannelMode::Imu);
    let model = write_model(dir.path(), &small_cnn(UqMethod::McDropout));
    let s = TrainSettings { data: prep.clone(), model, epochs: 2, lr: 0.01, seed: 7, out: dir.path().join("t1") };
    execute(&RunConfig::Train(s.clone())).unwrap();
    let log = String::from_utf8(read(dir.path().join("t1/train_log.csv"))).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert_eq!(log.lines().next().unwrap(), "epoch,train_loss,val_loss,val_wF1");
    execute(&RunConfig::Train(TrainSettings { out: dir.path().join("t2"), ..s.clone() })).unwrap();
    assert_eq!(read(dir.path().join("t1/model.ckpt")), read(dir.path().join("t2/model.ckpt")));
    assert_eq!(log.as_bytes(), read(dir.path().join("t2/train_log.csv")));

    let flip = ModelConfig::lstm(&[8]).with_uq(UqMethod::Flipout, 0.0).with_batch_size(16);
    flip.validate().unwrap();
    let model = write_model(dir.path(), &flip);
    execute(&RunConfig::Train(TrainSettings { model, out: dir.path().join("t3"), epochs: 1, ..s })).unwrap();
    let log = String::from_utf8(read(dir.path().join("t3/train_log.csv"))).unwrap();
    assert!(log.starts_with("epoch,train_loss,val_loss,val_wF1,kl\n"));
}

#[test]
fn search_matches_schedule_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), ChannelMode::Imu);
    fs::write(dir.path().join("space.txt"), "family = cnn\nuq = mc_dropout\ncnn_blocks = 1..2\nfilters = 16..24\n").unwrap();
    let mut s = SearchSettings::new(prep, uqtsc::arch::Family::Cnn, UqMethod::McDropout, 2, 3, dir.path().join("s1"));
    s.space = Some(dir.path().join("space.txt"));
    s.min_budget = 1;
    s.max_budget = 3;
    execute(&RunConfig::Search(s.clone())).unwrap();
    let csv = String::from_utf8(read(dir.path().join("s1/trials.csv"))).unwrap();
    let schedule = uqtsc::hpo::hyperband_schedule(1, 3, 3).unwrap();
    let per_iteration: usize = schedule.brackets.iter().flat_map(|b| &b.rungs).map(|r| r.n_configs).sum();
    assert_eq!(csv.lines().count(), 1 + 2 * per_iteration);
    let epochs: usize = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(epochs, schedule.total_epochs(2, uqtsc::hpo::IterationMode::FullSweep));
    assert!(dir.path().join("s1/incumbent.ckpt").is_file());

    let out = bin().arg("rerun").arg(dir.path().join("s1/run_config.txt")).arg("--out").arg(dir.path().join("s2")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trials.csv", "incumbent.ckpt", "incumbent.txt", "space.txt"] {
        assert_eq!(read(dir.path().join("s1").join(f)), read(dir.path().join("s2").join(f)), "{f}");
    }

    let empty = subdir(dir.path(), "empty");
    let err = execute(&RunConfig::Search(SearchSettings { data: empty, out: dir.path().join("s3"), ..s })).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    assert!(!dir.path().join("s3").exists());
}

#[test]
fn evaluate_reports_and_checks_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), ChannelMode::Imu);
    let test = read_dataset(&prep.join("test.ds")).unwrap();
    let net = build(&small_cnn(UqMethod::None), InputShape { channels: 6, length: 100 }, 2).unwrap();
    let ckpt = dir.path().join("plain.ckpt");
    save_checkpoint(&net, &ckpt).unwrap();
    let s = EvaluateSettings {
        checkpoint: ckpt.clone(),
        data: prep.clone(),
        samples: 10,
        bins: 10,
        ece_mode: EceMode::Confidence,
        seed: 1,
        workers: 1,
        out: dir.path().join("e1"),
    };
    execute(&RunConfig::Evaluate(s.clone())).unwrap();
    let report = EvalReport::parse_csv(&fs::read_to_string(dir.path().join("e1/report.csv")).unwrap()).unwrap();
    assert_eq!(report.rows.len(), test.len());

    // Without UQ every pass agrees with a single deterministic pass.
    let (x, _) = uqtsc::train::dataset_tensor(&test).unwrap();
    let probs = net.predict_proba(&x, uqtsc::nn::Mode::Infer, &mut uqtsc::rng::stream(0, "x", 0)).unwrap();
    for (row, p) in report.rows.iter().zip(probs.data().chunks(2)) {
        assert!((row.entropy - predictive_entropy(p).unwrap()).abs() < 1e-12);
    }

    // Recompute the footer from the per-sample rows.
    let labels: Vec<u8> = report.rows.iter().map(|r| r.label).collect();
    let preds: Vec<u8> = report.rows.iter().map(|r| u8::from(r.probs[1] > r.probs[0])).collect();
    let scores = f1_and_accuracy(&preds, &labels).unwrap();
    let a = &report.aggregates;
    assert!((scores.accuracy - a.accuracy).abs() < 1e-9);
    assert!((scores.weighted_f1 - a.weighted_f1).abs() < 1e-9);
    let mean_h = report.rows.iter().map(|r| r.entropy).sum::<f64>() / report.rows.len() as f64;
    assert!((mean_h - a.mean_entropy).abs() < 1e-9);
    let mut ece = 0.0;
    for k in 0..10 {
        let members: Vec<_> = report
            .rows
            .iter()
            .filter(|r| {
                let c = r.probs[0].max(r.probs[1]);
                let lo = k as f64 / 10.0;
                (k == 0 && c == 0.0) || (c > lo && c <= lo + 0.1 + 1e-15 && (k == 9 || c <= (k + 1) as f64 / 10.0))
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let conf = members.iter().map(|r| r.probs[0].max(r.probs[1])).sum::<f64>() / members.len() as f64;
        let acc = members.iter().filter(|r| r.pred == r.label).count() as f64 / members.len() as f64;
        ece += members.len() as f64 / report.rows.len() as f64 * (acc - conf).abs();
    }
    assert!((ece - a.ece).abs() < 1e-9, "{ece} vs {}", a.ece);

    let fused = prepare(&subdir(dir.path(), "f"), ChannelMode::Fused);
    let err = execute(&RunConfig::Evaluate(EvaluateSettings { data: fused, out: dir.path().join("e2"), ..s })).unwrap_err();
    assert!(matches!(err, CliError::CheckpointMismatch { .. }));
}

fn handmade_report(entropy: Option<f64>) -> String {
    let mut text = String::from("sample_id,p0,p1,entropy,label,pred,outcome\n#meta,uq,mc_dropout\n#meta,family,cnn\n");
    text.push_str("#agg,n,0\n#agg,accuracy,0.9913\n#agg,f1_cl0,0.9942\n#agg,f1_cl1,0.9814\n#agg,f1_weighted,0.99\n#agg,ece,0.0532\n");
    if let Some(h) = entropy {
        text.push_str(&format!("#agg,mean_entropy,{h}\n"));
    }
    text
}

#[test]
fn select_gate_and_malformed_reports() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("row24.csv");
    fs::write(&good, handmade_report(Some(0.0142))).unwrap();
    let worse = dir.path().join("worse.csv");
    fs::write(&worse, handmade_report(Some(0.3))).unwrap();
    execute(&RunConfig::Select(SelectSettings { reports: vec![worse, good.clone()], out: dir.path().join("sel") })).unwrap();
    let table = fs::read_to_string(dir.path().join("sel/selection.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains("row24.csv") && rows[1].ends_with(",select"));
    assert!(rows[2].ends_with(",reject"));

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, handmade_report(None)).unwrap();
    let err = execute(&RunConfig::Select(SelectSettings { reports: vec![broken], out: dir.path().join("sel2") })).unwrap_err();
    assert!(matches!(err, CliError::Metrics(MetricsError::MalformedReport(_))));
}

#[test]
fn report_writes_deterministic_plots() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = uqtsc::rng::stream(3, "probs", 0);
    let probs: Vec<[f64; 2]> = (0..40)
        .map(|_| {
            let p: f64 = rand::Rng::random(&mut rng);
            [1.0 - p, p]
        })
        .collect();
    let labels: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
    let ids = (0..40).map(|i| format!("s{i}")).collect();
    let report = EvalReport::from_predictions(ids, &probs, &labels, 10, EceMode::Confidence).unwrap().with_meta("uq", "flipout");
    let path = dir.path().join("r.csv");
    fs::write(&path, report.to_csv()).unwrap();
    for out in ["a", "b"] {
        execute(&RunConfig::Report(ReportSettings { reports: vec![path.clone()], out: dir.path().join(out) })).unwrap();
    }
    for f in ["reliability.svg", "ece_by_uq.svg", "entropy_by_uq.svg", "entropy_scatter.svg", "summary.csv"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)), "{f}");
    }
    let scatter = fs::read_to_string(dir.path().join("a/entropy_scatter.svg")).unwrap();
    assert_eq!(scatter.matches("<circle").count(), 40);
}

#[test]
fn rerun_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rc.txt");
    fs::write(&p, "command = report\nreports = a.csv\nout = x\nextra = 1\n").unwrap();
    let out = bin().arg("rerun").arg(&p).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `extra`"));
}
