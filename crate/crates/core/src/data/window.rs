use super::{DataError, Generation, Result, SequenceDataset, TimeSeriesLog, Window};

/// Start indices of every full window of length `w` at stride `s` in a
/// series of length `len`.
pub fn window_starts(len: usize, w: usize, s: usize) -> impl Iterator<Item = usize> {
    assert!(w >= 1 && s >= 1, "window and step must be positive");
    (0..).map(move |i| i * s).take_while(move |&start| start + w <= len)
}

pub fn window_count(len: usize, w: usize, s: usize) -> usize {
    if len < w {
        0
    } else {
        (len - w) / s + 1
    }
}

/// Majority label over `labels`; `None` on an exact tie.
pub fn majority_label(labels: impl IntoIterator<Item = u8>) -> Option<u8> {
    let (mut zeros, mut ones) = (0usize, 0usize);
    for l in labels {
        if l == 0 {
            zeros += 1;
        } else {
            ones += 1;
        }
    }
    match zeros.cmp(&ones) {
        std::cmp::Ordering::Greater => Some(0),
        std::cmp::Ordering::Less => Some(1),
        std::cmp::Ordering::Equal => None,
    }
}

pub fn slide_windows(log: &TimeSeriesLog, w: usize, s: usize) -> Result<SequenceDataset> {
    if w == 0 || s == 0 {
        return Err(DataError::InvalidArgument(format!("window {w} and step {s} must be positive")));
    }
    let mut ds = SequenceDataset::empty(log.channel_names(), w, Generation::Sliding { window: w, step: s });
    for start in window_starts(log.len(), w, s) {
        match majority_label(log.labels[start..start + w].iter().copied()) {
            Some(label) => ds.windows.push(Window {
                data: log.extract(start, w, 1),
                label,
                source_log_id: log.log_id.clone(),
                start_index: start,
            }),
            None => ds.ties_discarded += 1,
        }
    }
    Ok(ds)
}

/// Splits the log into `f` phase-shifted decimated streams (phase `p` takes
/// indices `p, p+f, ...`) and cuts each stream into non-overlapping windows of
/// `target_length` samples.
pub fn subsample(log: &TimeSeriesLog, f: usize, target_length: usize) -> Result<SequenceDataset> {
    if f < 2 || target_length == 0 {
        return Err(DataError::InvalidArgument(format!(
            "subsample factor {f} must be >= 2 and target length {target_length} >= 1"
        )));
    }
    let len = log.len();
    let longest = len.div_ceil(f);
    if longest < target_length {
        return Err(DataError::TooShort { stream_len: longest, target: target_length });
    }
    let mut ds = SequenceDataset::empty(log.channel_names(), target_length, Generation::Subsample { factor: f });
    for phase in 0..f.min(len) {
        let stream_len = (len - phase).div_ceil(f);
        for k in 0..stream_len / target_length {
            let start = phase + k * target_length * f;
            let end = start + (target_length - 1) * f;
            match majority_label(log.labels[start..=end].iter().copied()) {
                Some(label) => ds.windows.push(Window {
                    data: log.extract(start, target_length, f),
                    label,
                    source_log_id: log.log_id.clone(),
                    start_index: start,
                }),
                None => ds.ties_discarded += 1,
            }
        }
    }
    Ok(ds)
}
