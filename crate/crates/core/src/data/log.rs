use super::{DataError, Result};

pub const IMU_CHANNELS: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"];

pub const JOINT_CHANNELS: [&str; 12] = [
    "w0_speed", "w0_accel", "w0_effort", "w1_speed", "w1_accel", "w1_effort", "w2_speed",
    "w2_accel", "w2_effort", "w3_speed", "w3_accel", "w3_effort",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelGroup {
    Imu,
    Joint,
}

impl ChannelGroup {
    pub fn of(name: &str) -> Option<Self> {
        if IMU_CHANNELS.contains(&name) {
            Some(Self::Imu)
        } else if JOINT_CHANNELS.contains(&name) {
            Some(Self::Joint)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Imu => "imu",
            Self::Joint => "joint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub group: ChannelGroup,
    pub values: Vec<f64>,
}

/// One contiguous recording. Channels are stored column-wise; `labels[i]` is
/// the terrain class at step `i` (0 = rock, 1 = sand).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesLog {
    pub log_id: String,
    pub sample_rate_hz: f64,
    pub channels: Vec<Channel>,
    pub labels: Vec<u8>,
}

impl TimeSeriesLog {
    /// Checks the structural invariants: equal lengths, known channel
    /// layout (6 IMU channels, optionally followed by 12 joint channels) and
    /// binary labels.
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(DataError::EmptyLog);
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(DataError::InvalidArgument(format!(
                "sample rate {} is not positive",
                self.sample_rate_hz
            )));
        }
        let n = self.labels.len();
        for ch in &self.channels {
            if ch.values.len() != n {
                return Err(DataError::InvalidArgument(format!(
                    "channel `{}` has {} samples, labels have {n}",
                    ch.name,
                    ch.values.len()
                )));
            }
            if ChannelGroup::of(&ch.name) != Some(ch.group) {
                return Err(DataError::UnexpectedColumn(ch.name.clone()));
            }
        }
        let imu = self.group_len(ChannelGroup::Imu);
        let joint = self.group_len(ChannelGroup::Joint);
        if imu != 0 && imu != 6 {
            return Err(DataError::InvalidArgument(format!("imu group has {imu} channels, expected 6")));
        }
        if joint != 0 && joint != 12 {
            return Err(DataError::InvalidArgument(format!(
                "joint group has {joint} channels, expected 12"
            )));
        }
        if let Some(i) = self.labels.iter().position(|&l| l > 1) {
            return Err(DataError::InvalidLabel(i as u64));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn group_len(&self, group: ChannelGroup) -> usize {
        self.channels.iter().filter(|c| c.group == group).count()
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    /// Copies the `[channels x len]` block starting at `start` with stride
    /// `stride` into a row-major buffer.
    pub fn extract(&self, start: usize, len: usize, stride: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.channels.len() * len);
        for ch in &self.channels {
            out.extend((0..len).map(|j| ch.values[start + j * stride]));
        }
        out
    }

    /// Keeps only the steps for which `keep` is true.
    pub fn retain_steps(&self, keep: &[bool]) -> Self {
        let pick = |v: &[f64]| v.iter().zip(keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
        Self {
            log_id: self.log_id.clone(),
            sample_rate_hz: self.sample_rate_hz,
            channels: self
                .channels
                .iter()
                .map(|c| Channel { name: c.name.clone(), group: c.group, values: pick(&c.values) })
                .collect(),
            labels: self.labels.iter().zip(keep).filter(|(_, &k)| k).map(|(&l, _)| l).collect(),
        }
    }
}
