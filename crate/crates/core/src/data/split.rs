use rand::seq::SliceRandom;

use super::{DataError, Result, TimeSeriesLog};
use crate::rng;

/// Whole-log assignment to train/val/test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffles logs with `seed`, then fills test and val greedily: logs are
/// added while the split holds fewer timesteps than its target. The test
/// target is a fraction of all steps; the val target a fraction of what
/// remains after test. Train and val always keep at least one log.
pub fn split_logs(logs: &[TimeSeriesLog], test_fraction: f64, val_fraction: f64, seed: u64) -> Result<LogSplit> {
    let sizes: Vec<(&str, usize)> = logs.iter().map(|l| (l.log_id.as_str(), l.len())).collect();
    split_by_size(&sizes, test_fraction, val_fraction, seed)
}

pub(crate) fn split_by_size(logs: &[(&str, usize)], test_fraction: f64, val_fraction: f64, seed: u64) -> Result<LogSplit> {
    if logs.len() < 3 {
        return Err(DataError::TooFewLogs(logs.len()));
    }
    for (name, f) in [("test", test_fraction), ("val", val_fraction)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(DataError::InvalidArgument(format!("{name} fraction {f} not in (0,1)")));
        }
    }
    for (i, (id, _)) in logs.iter().enumerate() {
        if logs[..i].iter().any(|(other, _)| other == id) {
            return Err(DataError::InvalidArgument(format!("duplicate log id `{id}`")));
        }
    }
    let mut order: Vec<usize> = (0..logs.len()).collect();
    order.shuffle(&mut rng::stream(seed, "split", 0));

    let total: usize = logs.iter().map(|l| l.1).sum();
    let mut pool = order.into_iter();
    let mut take = |target: f64, reserve: usize, left: &mut usize| {
        let mut ids = Vec::new();
        let mut steps = 0usize;
        while (steps as f64) < target && *left > reserve {
            let i = pool.next().expect("pool holds `left` logs");
            steps += logs[i].1;
            *left -= 1;
            ids.push(i);
        }
        (ids, steps)
    };
    let mut left = logs.len();
    // Reserve one log each for val and train.
    let (test, test_steps) = take(test_fraction * total as f64, 2, &mut left);
    let (val, _) = take(val_fraction * (total - test_steps) as f64, 1, &mut left);
    let train: Vec<usize> = pool.collect();

    let names = |ix: Vec<usize>| ix.into_iter().map(|i| logs[i].0.to_string()).collect();
    Ok(LogSplit { train: names(train), val: names(val), test: names(test) })
}
