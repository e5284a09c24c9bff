use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::space::{canonicalize, sample_random, SearchSpace};
use super::{HpoError, Result};
use crate::rng::Rng;

/// Proposal-model knobs; defaults follow the usual BOHB settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeSettings {
    pub top_fraction: f64,
    pub candidates: usize,
    pub bandwidth_factor: f64,
    pub min_bandwidth: f64,
    pub random_fraction: f64,
    /// Probability mass a discrete activity kernel puts on the other state.
    pub activity_bandwidth: f64,
    /// Also floor each bandwidth at `1 / min(100, n + 1)` of the range, as
    /// hyperopt's TPE does. Keeps the good density from collapsing onto a
    /// cluster of near-duplicates.
    pub adaptive_floor: bool,
}

impl Default for KdeSettings {
    fn default() -> Self {
        Self {
            top_fraction: 0.15,
            candidates: 64,
            bandwidth_factor: 3.0,
            min_bandwidth: 1e-3,
            random_fraction: 1.0 / 3.0,
            activity_bandwidth: 0.1,
            adaptive_floor: true,
        }
    }
}

#[derive(Debug, Clone)]
struct Density {
    points: Vec<Vec<f64>>,
    active: Vec<Vec<bool>>,
    bandwidth: Vec<f64>,
}

impl Density {
    fn fit(points: &[&[f64]], settings: &KdeSettings) -> Self {
        let n = points.len();
        let d = points.first().map_or(0, |p| p.len());
        let active: Vec<Vec<bool>> = points.iter().map(|p| p.iter().map(|v| !v.is_nan()).collect()).collect();
        // Inactive coordinates sit at the middle of their range.
        let points: Vec<Vec<f64>> =
            points.iter().map(|p| p.iter().map(|&v| if v.is_nan() { 0.5 } else { v }).collect()).collect();
        let scale = (n as f64).powf(-1.0 / (d as f64 + 4.0));
        let mut floor = settings.min_bandwidth;
        if settings.adaptive_floor {
            floor = floor.max(1.0 / (n as f64 + 1.0).min(100.0));
        }
        let bandwidth = (0..d)
            .map(|j| {
                let sd = if n > 1 {
                    let mean = points.iter().map(|p| p[j]).sum::<f64>() / n as f64;
                    (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                } else {
                    0.0
                };
                (1.06 * sd * scale).max(floor)
            })
            .collect();
        Self { points, active, bandwidth }
    }

    fn pdf(&self, x: &[f64], conditional: &[bool], lambda: f64) -> f64 {
        let x_active: Vec<bool> = x.iter().map(|v| !v.is_nan()).collect();
        let total: f64 = self
            .points
            .iter()
            .zip(&self.active)
            .map(|(p, act)| {
                let mut k = 1.0;
                for j in 0..p.len() {
                    let xj = if x[j].is_nan() { 0.5 } else { x[j] };
                    let z = (xj - p[j]) / self.bandwidth[j];
                    k *= (-0.5 * z * z).exp() / (self.bandwidth[j] * (2.0 * std::f64::consts::PI).sqrt());
                    if conditional[j] {
                        k *= if act[j] == x_active[j] { 1.0 - lambda } else { lambda };
                    }
                }
                k
            })
            .sum();
        total / self.points.len() as f64
    }

    fn sample(&self, factor: f64, rng: &mut Rng) -> Vec<f64> {
        let center = &self.points[rng.random_range(0..self.points.len())];
        center
            .iter()
            .zip(&self.bandwidth)
            .map(|(&c, &bw)| truncated_normal(c, bw * factor, rng))
            .collect()
    }
}

fn truncated_normal(mean: f64, sd: f64, rng: &mut Rng) -> f64 {
    for _ in 0..100 {
        let z: f64 = StandardNormal.sample(rng);
        let v = mean + sd * z;
        if (0.0..=1.0).contains(&v) {
            return v;
        }
    }
    mean.clamp(0.0, 1.0)
}

/// Good/bad densities over observed points at one budget.
#[derive(Debug, Clone)]
pub struct KdeModel {
    good: Density,
    bad: Density,
    conditional: Vec<bool>,
    settings: KdeSettings,
}

impl KdeModel {
    /// Fits from canonical points and losses; failed trials carry
    /// `f64::INFINITY` and sort last. Needs `d + 2` finite losses.
    pub fn fit(points: &[Vec<f64>], losses: &[f64], conditional: &[bool], settings: KdeSettings) -> Result<Self> {
        let d = conditional.len();
        let ok = losses.iter().filter(|l| l.is_finite()).count();
        if ok < d + 2 {
            return Err(HpoError::InsufficientData { have: ok, need: d + 2 });
        }
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
        let n_good = (d + 1).max((settings.top_fraction * n as f64).floor() as usize);
        let n_bad = (d + 1).max(((1.0 - settings.top_fraction) * n as f64).floor() as usize);
        let good: Vec<&[f64]> = order[..n_good].iter().map(|&i| points[i].as_slice()).collect();
        let bad: Vec<&[f64]> = order[n_good..n.min(n_good + n_bad)].iter().map(|&i| points[i].as_slice()).collect();
        Ok(Self {
            good: Density::fit(&good, &settings),
            bad: Density::fit(&bad, &settings),
            conditional: conditional.to_vec(),
            settings,
        })
    }

    pub fn good_pdf(&self, x: &[f64]) -> f64 {
        self.good.pdf(x, &self.conditional, self.settings.activity_bandwidth)
    }

    pub fn bad_pdf(&self, x: &[f64]) -> f64 {
        self.bad.pdf(x, &self.conditional, self.settings.activity_bandwidth)
    }

    /// Draws candidates from the widened good density and returns the one
    /// maximizing good/bad.
    pub fn propose<S: SearchSpace + ?Sized>(&self, space: &S, rng: &mut Rng) -> Vec<f64> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..self.settings.candidates.max(1) {
            let raw = self.good.sample(self.settings.bandwidth_factor, rng);
            let x = canonicalize(space, &raw);
            let score = self.good_pdf(&x).max(1e-32) / self.bad_pdf(&x).max(1e-32);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, x));
            }
        }
        best.unwrap().1
    }
}

/// Model-based proposal from trials observed at one budget, or a uniform
/// sample with probability `random_fraction`.
pub fn kde_propose<S: SearchSpace + ?Sized>(
    space: &S,
    points: &[Vec<f64>],
    losses: &[f64],
    settings: KdeSettings,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let model = KdeModel::fit(points, losses, &space.conditional(), settings)?;
    if rng.random::<f64>() < settings.random_fraction {
        return Ok(sample_random(space, rng));
    }
    Ok(model.propose(space, rng))
}
