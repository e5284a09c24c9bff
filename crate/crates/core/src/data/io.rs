use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{
    Channel, ChannelGroup, DataError, Generation, Result, SequenceDataset, SplitTag, TimeSeriesLog,
    Window, IMU_CHANNELS, JOINT_CHANNELS,
};
use crate::kv::{KvDoc, KvSection};

/// Reads a sensor-log CSV:
/// `t,acc_x,...,gyr_z[,w0_speed,...,w3_effort],label`.
/// The log id is the file stem; the sample rate is inferred from `t`.
pub fn load_log(path: &Path) -> Result<TimeSeriesLog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    let names = check_header(&header)?;

    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(DataError::RaggedRow(line));
        }
        let num = |col: usize| -> Result<f64> {
            record[col]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::NonNumericValue { line, column: header[col].clone() })
        };
        let t = num(0)?;
        if times.last().is_some_and(|&prev| t <= prev) {
            return Err(DataError::NonMonotonicTime(line));
        }
        times.push(t);
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(num(c + 1)?);
        }
        let label_col = header.len() - 1;
        labels.push(match &record[label_col] {
            "0" => 0,
            "1" => 1,
            other if other.parse::<f64>().is_err() => {
                return Err(DataError::NonNumericValue { line, column: "label".into() })
            }
            _ => return Err(DataError::InvalidLabel(line)),
        });
    }
    if labels.is_empty() {
        return Err(DataError::EmptyLog);
    }
    let sample_rate_hz = if times.len() >= 2 {
        let rate = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
        (rate * 1e6).round() / 1e6
    } else {
        100.0
    };
    let log_id = path.file_stem().map_or_else(|| "log".to_string(), |s| s.to_string_lossy().into_owned());
    let log = TimeSeriesLog {
        log_id,
        sample_rate_hz,
        channels: names
            .into_iter()
            .zip(columns)
            .map(|(name, values)| Channel { group: ChannelGroup::of(name).expect("checked header"), name: name.to_string(), values })
            .collect(),
        labels,
    };
    log.validate()?;
    Ok(log)
}

fn csv_error(path: &Path, e: csv::Error) -> DataError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        csv::ErrorKind::Utf8 { pos, .. } => DataError::NonNumericValue {
            line: pos.map_or(0, |p| p.line()),
            column: "<utf-8>".into(),
        },
        other => DataError::InvalidArgument(format!("{}: {other:?}", path.display())),
    }
}

fn check_header(header: &[String]) -> Result<Vec<&'static str>> {
    for required in std::iter::once("t").chain(IMU_CHANNELS).chain(std::iter::once("label")) {
        if !header.iter().any(|h| h == required) {
            return Err(DataError::MissingColumn(required.to_string()));
        }
    }
    let has_joints = header.iter().any(|h| JOINT_CHANNELS.contains(&h.as_str()));
    if has_joints {
        if let Some(missing) = JOINT_CHANNELS.iter().find(|j| !header.iter().any(|h| h == *j)) {
            return Err(DataError::MissingColumn(missing.to_string()));
        }
    }
    let mut expected: Vec<&'static str> = vec!["t"];
    expected.extend(IMU_CHANNELS);
    if has_joints {
        expected.extend(JOINT_CHANNELS);
    }
    expected.push("label");
    if let Some((got, _)) = header.iter().zip(&expected).find(|(h, e)| h != *e) {
        return Err(DataError::UnexpectedColumn(got.clone()));
    }
    if header.len() != expected.len() {
        return Err(DataError::UnexpectedColumn(header[expected.len().min(header.len() - 1)].clone()));
    }
    Ok(expected[1..expected.len() - 1].to_vec())
}

pub fn render_log_csv(log: &TimeSeriesLog) -> String {
    let mut out = String::with_capacity(log.len() * (12 + 11 * log.channel_count()));
    out.push('t');
    for c in &log.channels {
        out.push(',');
        out.push_str(&c.name);
    }
    out.push_str(",label\n");
    for i in 0..log.len() {
        let _ = write!(out, "{:.4}", i as f64 / log.sample_rate_hz);
        for c in &log.channels {
            let _ = write!(out, ",{:.6}", c.values[i]);
        }
        let _ = writeln!(out, ",{}", log.labels[i]);
    }
    out
}

pub fn write_log_csv(log: &TimeSeriesLog, path: &Path) -> Result<()> {
    fs::write(path, render_log_csv(log)).map_err(|e| DataError::io(path, e))
}

/// Log paths listed one per line, relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

pub fn write_manifest(path: &Path, entries: &[String]) -> Result<()> {
    let mut text = String::from("# sensor logs, one path per line\n");
    for e in entries {
        text.push_str(e);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}

const DATASET_MAGIC: &str = "UQTSC-DS-1";

/// Dataset files: a text header (magic line, `key = value` lines, `---`)
/// followed by little-endian records
/// `label:u8 start:u64 id_len:u32 id:[u8] data:[f64; channels*length]`.
pub fn write_dataset(ds: &SequenceDataset, path: &Path) -> Result<()> {
    let mut header = KvSection::default();
    header.push("channels", ds.channel_names.join(","));
    header.push("window_length", ds.window_length);
    header.push("generation", ds.generation.render());
    header.push("split", ds.split.map_or("none", SplitTag::as_str));
    header.push("ties_discarded", ds.ties_discarded);
    header.push("count", ds.len());
    let file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| DataError::io(path, e);
    write!(w, "{DATASET_MAGIC}\n{}---\n", KvDoc::from(header).render()).map_err(io)?;
    for win in &ds.windows {
        w.write_all(&[win.label]).map_err(io)?;
        w.write_all(&(win.start_index as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(win.source_log_id.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(win.source_log_id.as_bytes()).map_err(io)?;
        for x in &win.data {
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_dataset(path: &Path) -> Result<SequenceDataset> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| DataError::io(path, e))?;
    let bad = |reason: &str| DataError::MalformedDataset { path: path.to_path_buf(), reason: reason.to_string() };
    let sep = b"\n---\n";
    let split_at = bytes.windows(sep.len()).position(|w| w == sep).ok_or_else(|| bad("no header terminator"))?;
    let header = std::str::from_utf8(&bytes[..split_at]).map_err(|_| bad("header is not utf-8"))?;
    let rest = header.strip_prefix(DATASET_MAGIC).ok_or_else(|| bad("bad magic"))?;
    let doc = KvDoc::parse(rest).map_err(|e| bad(&e.to_string()))?;
    let root = doc.root();
    let get = |k: &str| root.get(k).ok_or_else(|| bad(&format!("missing `{k}`")));
    let channel_names: Vec<String> = get("channels")?.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect();
    let window_length: usize = get("window_length")?.parse().map_err(|_| bad("window_length"))?;
    let generation = Generation::parse(get("generation")?).ok_or_else(|| bad("generation"))?;
    let split = match get("split")? {
        "none" => None,
        s => Some(SplitTag::parse(s).ok_or_else(|| bad("split"))?),
    };
    let ties_discarded = get("ties_discarded")?.parse().map_err(|_| bad("ties_discarded"))?;
    let count: usize = get("count")?.parse().map_err(|_| bad("count"))?;

    let mut body = &bytes[split_at + sep.len()..];
    let mut take = |n: usize| -> Result<&[u8]> {
        if body.len() < n {
            return Err(bad("truncated body"));
        }
        let (head, tail) = body.split_at(n);
        body = tail;
        Ok(head)
    };
    let values = channel_names.len() * window_length;
    let mut windows = Vec::with_capacity(count);
    for _ in 0..count {
        let label = take(1)?[0];
        let start_index = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let id_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let source_log_id = String::from_utf8(take(id_len)?.to_vec()).map_err(|_| bad("log id is not utf-8"))?;
        let data = take(values * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        windows.push(Window { data, label, source_log_id, start_index });
    }
    if !body.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(SequenceDataset { channel_names, window_length, generation, split, windows, ties_discarded })
}
