use std::str::FromStr;

use super::{ChannelGroup, DataError, Result, SequenceDataset, TimeSeriesLog};

/// Input configuration: IMU only (6), joints only (12) or both (18).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    Imu,
    Joints,
    Fused,
}

impl ChannelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Imu => "imu",
            Self::Joints => "joints",
            Self::Fused => "fused",
        }
    }

    fn wants(self, group: ChannelGroup) -> bool {
        matches!(
            (self, group),
            (Self::Fused, _) | (Self::Imu, ChannelGroup::Imu) | (Self::Joints, ChannelGroup::Joint)
        )
    }

    fn required(self) -> &'static [ChannelGroup] {
        match self {
            Self::Imu => &[ChannelGroup::Imu],
            Self::Joints => &[ChannelGroup::Joint],
            Self::Fused => &[ChannelGroup::Imu, ChannelGroup::Joint],
        }
    }
}

impl FromStr for ChannelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "imu" => Ok(Self::Imu),
            "joints" => Ok(Self::Joints),
            "fused" => Ok(Self::Fused),
            other => Err(format!("unknown channel mode `{other}` (imu|joints|fused)")),
        }
    }
}

fn check_groups(groups: &[ChannelGroup], mode: ChannelMode) -> Result<()> {
    for g in mode.required() {
        if !groups.contains(g) {
            return Err(DataError::MissingGroup(if *g == ChannelGroup::Imu { "imu" } else { "joints" }));
        }
    }
    Ok(())
}

/// Channels are kept in header order, which puts IMU before joints.
pub fn select_channels(log: &TimeSeriesLog, mode: ChannelMode) -> Result<TimeSeriesLog> {
    let groups: Vec<_> = log.channels.iter().map(|c| c.group).collect();
    check_groups(&groups, mode)?;
    Ok(TimeSeriesLog {
        channels: log.channels.iter().filter(|c| mode.wants(c.group)).cloned().collect(),
        ..log.clone()
    })
}

pub fn select_dataset_channels(ds: &SequenceDataset, mode: ChannelMode) -> Result<SequenceDataset> {
    let groups: Vec<Option<ChannelGroup>> = ds.channel_names.iter().map(|n| ChannelGroup::of(n)).collect();
    check_groups(&groups.iter().flatten().copied().collect::<Vec<_>>(), mode)?;
    let keep: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].is_some_and(|g| mode.wants(g))).collect();
    let l = ds.window_length;
    let mut out = ds.clone();
    out.channel_names = keep.iter().map(|&i| ds.channel_names[i].clone()).collect();
    for w in &mut out.windows {
        w.data = keep.iter().flat_map(|&i| w.data[i * l..(i + 1) * l].iter().copied()).collect();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{slide_windows, Channel, IMU_CHANNELS, JOINT_CHANNELS};

    fn log(joints: bool) -> TimeSeriesLog {
        let mut names: Vec<&str> = IMU_CHANNELS.to_vec();
        if joints {
            names.extend(JOINT_CHANNELS);
        }
        TimeSeriesLog {
            log_id: "l".into(),
            sample_rate_hz: 100.0,
            channels: names
                .iter()
                .enumerate()
                .map(|(i, n)| Channel { name: n.to_string(), group: ChannelGroup::of(n).unwrap(), values: vec![i as f64; 10] })
                .collect(),
            labels: vec![0; 10],
        }
    }

    #[test]
    fn modes() {
        assert_eq!(select_channels(&log(true), ChannelMode::Imu).unwrap().channel_count(), 6);
        assert_eq!(select_channels(&log(true), ChannelMode::Joints).unwrap().channel_count(), 12);
        assert_eq!(select_channels(&log(true), ChannelMode::Fused).unwrap().channel_count(), 18);
        assert!(matches!(select_channels(&log(false), ChannelMode::Joints), Err(DataError::MissingGroup(_))));
        assert!(matches!(select_channels(&log(false), ChannelMode::Fused), Err(DataError::MissingGroup(_))));
    }

    #[test]
    fn dataset_selection_keeps_values() {
        let ds = slide_windows(&log(true), 5, 5).unwrap();
        let j = select_dataset_channels(&ds, ChannelMode::Joints).unwrap();
        assert_eq!(j.channels(), 12);
        assert_eq!(j.windows[0].data[..5], [6.0; 5]);
        assert_eq!(j.channel_names[0], "w0_speed");
    }
}
