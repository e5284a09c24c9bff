use super::{ChannelGroup, DataError, Result, TimeSeriesLog};

/// Per-step activity: mean absolute wheel speed when joint channels exist,
/// otherwise the gyroscope magnitude.
pub fn activity(log: &TimeSeriesLog) -> Vec<f64> {
    let speeds: Vec<&[f64]> = log
        .channels
        .iter()
        .filter(|c| c.group == ChannelGroup::Joint && c.name.ends_with("_speed"))
        .map(|c| c.values.as_slice())
        .collect();
    if !speeds.is_empty() {
        return (0..log.len())
            .map(|i| speeds.iter().map(|s| s[i].abs()).sum::<f64>() / speeds.len() as f64)
            .collect();
    }
    let gyro: Vec<&[f64]> = ["gyr_x", "gyr_y", "gyr_z"]
        .iter()
        .filter_map(|n| log.channel(n).map(|c| c.values.as_slice()))
        .collect();
    (0..log.len()).map(|i| gyro.iter().map(|g| g[i] * g[i]).sum::<f64>().sqrt()).collect()
}

/// Removes every run of at least `min_gap_s` seconds whose activity stays
/// below `speed_threshold`, concatenating what remains.
pub fn trim_idle(log: &TimeSeriesLog, speed_threshold: f64, min_gap_s: f64) -> Result<TimeSeriesLog> {
    let has_signal = log.channels.iter().any(|c| c.group == ChannelGroup::Joint && c.name.ends_with("_speed"))
        || ["gyr_x", "gyr_y", "gyr_z"].iter().all(|n| log.channel(n).is_some());
    if !has_signal {
        return Err(DataError::MissingGroup("imu"));
    }
    let act = activity(log);
    if act.iter().all(|&a| a < speed_threshold) {
        return Err(DataError::AllIdle(log.log_id.clone()));
    }
    let min_run = (min_gap_s * log.sample_rate_hz).round().max(1.0) as usize;
    let mut keep = vec![true; act.len()];
    let mut i = 0;
    while i < act.len() {
        if act[i] < speed_threshold {
            let start = i;
            while i < act.len() && act[i] < speed_threshold {
                i += 1;
            }
            if i - start >= min_run {
                keep[start..i].iter_mut().for_each(|k| *k = false);
            }
        } else {
            i += 1;
        }
    }
    if keep.iter().all(|&k| k) {
        return Ok(log.clone());
    }
    Ok(log.retain_steps(&keep))
}
