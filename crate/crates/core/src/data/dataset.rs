use super::{DataError, Result, TimeSeriesLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generation {
    Sliding { window: usize, step: usize },
    /// Every `factor`-th step; window `start_index` is the first original
    /// index, later samples follow at stride `factor`.
    Subsample { factor: usize },
}

impl Generation {
    pub fn stride(self) -> usize {
        match self {
            Self::Sliding { .. } => 1,
            Self::Subsample { factor } => factor,
        }
    }

    pub fn render(self) -> String {
        match self {
            Self::Sliding { window, step } => format!("sliding:{window}x{step}"),
            Self::Subsample { factor } => format!("subsample:{factor}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if let Some(rest) = s.strip_prefix("sliding:") {
            let (w, st) = rest.split_once('x')?;
            return Some(Self::Sliding { window: w.parse().ok()?, step: st.parse().ok()? });
        }
        s.strip_prefix("subsample:")?.parse().ok().map(|factor| Self::Subsample { factor })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Val => "val",
            Self::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Self::Train),
            "val" => Some(Self::Val),
            "test" => Some(Self::Test),
            _ => None,
        }
    }
}

/// A labeled `[channels x window_length]` block, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub data: Vec<f64>,
    pub label: u8,
    pub source_log_id: String,
    pub start_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub channel_names: Vec<String>,
    pub window_length: usize,
    pub generation: Generation,
    pub split: Option<SplitTag>,
    pub windows: Vec<Window>,
    /// Windows dropped because their labels were split exactly 50/50.
    pub ties_discarded: usize,
}

impl SequenceDataset {
    pub fn empty(channel_names: Vec<String>, window_length: usize, generation: Generation) -> Self {
        Self { channel_names, window_length, generation, split: None, windows: Vec::new(), ties_discarded: 0 }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn with_split(mut self, tag: SplitTag) -> Self {
        self.split = Some(tag);
        self
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for w in &self.windows {
            c[usize::from(w.label.min(1))] += 1;
        }
        c
    }

    /// Appends the windows of `other`, which must share shape and generation.
    pub fn extend(&mut self, other: SequenceDataset) -> Result<()> {
        if other.channel_names != self.channel_names
            || other.window_length != self.window_length
            || other.generation != self.generation
        {
            return Err(DataError::Incompatible(format!(
                "{} channels x {} ({}) vs {} channels x {} ({})",
                self.channels(),
                self.window_length,
                self.generation.render(),
                other.channels(),
                other.window_length,
                other.generation.render()
            )));
        }
        self.windows.extend(other.windows);
        self.ties_discarded += other.ties_discarded;
        Ok(())
    }

    /// Re-extracts window `i` from its source log. Only meaningful before
    /// standardization.
    pub fn reconstruct(&self, i: usize, log: &TimeSeriesLog) -> Vec<f64> {
        let w = &self.windows[i];
        log.extract(w.start_index, self.window_length, self.generation.stride())
    }
}
