use super::{DataError, Result, SequenceDataset};
use crate::kv::{KvDoc, KvSection};

const STD_FLOOR: f64 = 1e-12;

/// Per-channel z-score parameters, fitted on the training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub channel_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_stats(train: &SequenceDataset) -> Result<ChannelStats> {
    if train.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let (c, l) = (train.channels(), train.window_length);
    let n = (train.len() * l) as f64;
    let mut mean = vec![0.0; c];
    for w in &train.windows {
        for (ch, m) in mean.iter_mut().enumerate() {
            *m += w.data[ch * l..(ch + 1) * l].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; c];
    for w in &train.windows {
        for ch in 0..c {
            var[ch] += w.data[ch * l..(ch + 1) * l].iter().map(|x| (x - mean[ch]).powi(2)).sum::<f64>();
        }
    }
    let std = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s < STD_FLOOR {
                1.0
            } else {
                s
            }
        })
        .collect();
    Ok(ChannelStats { channel_names: train.channel_names.clone(), mean, std })
}

pub fn standardize(ds: &SequenceDataset, stats: &ChannelStats) -> Result<SequenceDataset> {
    if ds.channel_names != stats.channel_names {
        return Err(DataError::Incompatible(format!(
            "dataset channels {:?} vs stats channels {:?}",
            ds.channel_names, stats.channel_names
        )));
    }
    let l = ds.window_length;
    let mut out = ds.clone();
    for w in &mut out.windows {
        for (ch, block) in w.data.chunks_mut(l).enumerate() {
            block.iter_mut().for_each(|x| *x = (*x - stats.mean[ch]) / stats.std[ch]);
        }
    }
    Ok(out)
}

impl ChannelStats {
    pub fn to_kv(&self) -> KvDoc {
        let mut root = KvSection::default();
        for (i, name) in self.channel_names.iter().enumerate() {
            root.push(&format!("{name}.mean"), self.mean[i]);
            root.push(&format!("{name}.std"), self.std[i]);
        }
        root.into()
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let bad = |e: crate::kv::KvError| DataError::InvalidArgument(e.to_string());
        let mut stats = Self { channel_names: Vec::new(), mean: Vec::new(), std: Vec::new() };
        for (k, _) in &doc.root().entries {
            if let Some(name) = k.strip_suffix(".mean") {
                stats.channel_names.push(name.to_string());
                stats.mean.push(doc.root().parse(k).map_err(bad)?.unwrap());
                let std_key = format!("{name}.std");
                stats.std.push(doc.root().parse(&std_key).map_err(bad)?.ok_or_else(|| {
                    DataError::InvalidArgument(format!("missing `{std_key}`"))
                })?);
            }
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Generation, Window};
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn ds(channels: &[Vec<f64>]) -> SequenceDataset {
        let l = channels[0].len();
        let mut d = SequenceDataset::empty(
            (0..channels.len()).map(|i| format!("c{i}")).collect(),
            l,
            Generation::Sliding { window: l, step: 1 },
        );
        d.windows.push(Window { data: channels.concat(), label: 0, source_log_id: "x".into(), start_index: 0 });
        d
    }

    #[test]
    fn hand_values() {
        let s = fit_stats(&ds(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]])).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert!((s.std[0] - 0.816_496_580_927_726).abs() < 1e-12);
        assert_eq!(s.std[1], 1.0);
        let z = standardize(&ds(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]), &s).unwrap();
        assert_eq!(&z.windows[0].data[3..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardized_train_is_standard_and_idempotent() {
        let mut rng = crate::rng::stream(3, "t", 0);
        let chans: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..500).map(|_| 10.0 * c as f64 + (c + 1) as f64 * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let d = ds(&chans);
        let z = standardize(&d, &fit_stats(&d).unwrap()).unwrap();
        let s2 = fit_stats(&z).unwrap();
        for c in 0..3 {
            assert!(s2.mean[c].abs() < 1e-9);
            assert!((s2.std[c] - 1.0).abs() < 1e-6);
        }
        let zz = standardize(&z, &s2).unwrap();
        for (a, b) in z.windows[0].data.iter().zip(&zz.windows[0].data) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_and_roundtrip() {
        let mut d = ds(&[vec![1.0]]);
        d.windows.clear();
        assert!(matches!(fit_stats(&d), Err(DataError::EmptyDataset)));
        let s = fit_stats(&ds(&[vec![1.0, 2.5], vec![0.1, 0.3]])).unwrap();
        assert_eq!(ChannelStats::from_kv(&KvDoc::parse(&s.to_kv().render()).unwrap()).unwrap(), s);
    }
}
