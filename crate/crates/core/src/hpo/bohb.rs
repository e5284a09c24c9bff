use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::kde::{KdeModel, KdeSettings};
use super::schedule::{hyperband_schedule, IterationMode, Rung};
use super::space::{sample_random, SearchSpace};
use super::{HpoError, Result};
use crate::rng::{derive_seed, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failed => "failed",
        }
    }
}

/// Outcome of training one config for one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub status: Status,
    pub val_loss: f64,
    pub val_score: f64,
    pub wall_seconds: f64,
}

impl Evaluation {
    pub fn ok(val_loss: f64, val_score: f64) -> Self {
        Self { status: Status::Ok, val_loss, val_score, wall_seconds: 0.0 }
    }

    /// Failed trials keep the worst possible loss.
    pub fn failed() -> Self {
        Self { status: Status::Failed, val_loss: f64::INFINITY, val_score: 0.0, wall_seconds: 0.0 }
    }

    pub fn with_wall_seconds(mut self, s: f64) -> Self {
        self.wall_seconds = s;
        self
    }

    fn rank_loss(&self) -> f64 {
        match self.status {
            Status::Ok if self.val_loss.is_finite() => self.val_loss,
            _ => f64::INFINITY,
        }
    }
}

/// Must be deterministic in `(config, budget, seed)`.
pub trait Objective<C>: Sync {
    fn evaluate(&self, config: &C, budget: usize, seed: u64) -> Evaluation;
}

impl<C, F> Objective<C> for F
where
    F: Fn(&C, usize, u64) -> Evaluation + Sync,
{
    fn evaluate(&self, config: &C, budget: usize, seed: u64) -> Evaluation {
        self(config, budget, seed)
    }
}

#[derive(Debug, Clone)]
pub struct Trial<C> {
    pub id: usize,
    /// Running bracket number across the whole search.
    pub bracket: usize,
    pub rung: usize,
    pub budget: usize,
    /// Index of the proposed config; shared by all rungs it reaches.
    pub config_id: usize,
    pub seed: u64,
    pub point: Vec<f64>,
    pub config: C,
    pub status: Status,
    pub val_loss: f64,
    pub val_score: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BohbSettings {
    pub min_budget: usize,
    pub max_budget: usize,
    pub eta: usize,
    pub iterations: usize,
    pub mode: IterationMode,
    pub seed: u64,
    pub workers: usize,
    pub kde: KdeSettings,
}

impl Default for BohbSettings {
    fn default() -> Self {
        Self {
            min_budget: 16,
            max_budget: 50,
            eta: 3,
            iterations: 20,
            mode: IterationMode::FullSweep,
            seed: 0,
            workers: 1,
            kde: KdeSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BohbResult<C> {
    pub trials: Vec<Trial<C>>,
    /// Index into `trials`.
    pub incumbent: Option<usize>,
}

impl<C> BohbResult<C> {
    pub fn incumbent(&self) -> Option<&Trial<C>> {
        self.incumbent.map(|i| &self.trials[i])
    }

    pub fn total_epochs(&self) -> usize {
        self.trials.iter().map(|t| t.budget).sum()
    }
}

/// Positions of the `keep` best results: failures last, ties by position.
/// Returned in their original order.
pub fn promote(results: &[Evaluation], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[a].rank_loss().total_cmp(&results[b].rank_loss()).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

/// Runs `n` configs through `rungs`. `evaluate(rung, ids)` returns one
/// evaluation per id. Returns the ids evaluated at each rung.
pub fn successive_halving<F>(n: usize, rungs: &[Rung], mut evaluate: F) -> Vec<Vec<usize>>
where
    F: FnMut(usize, &[usize]) -> Vec<Evaluation>,
{
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(rungs.len());
    for r in 0..rungs.len() {
        if current.is_empty() {
            break;
        }
        let results = evaluate(r, &current);
        out.push(current.clone());
        if let Some(next) = rungs.get(r + 1) {
            let keep = next.n_configs.min(current.len());
            current = promote(&results, keep).into_iter().map(|i| current[i]).collect();
        }
    }
    out
}

fn evaluate_all<C: Sync, O: Objective<C> + ?Sized>(
    objective: &O,
    jobs: &[(&C, usize, u64)],
    workers: usize,
) -> Vec<Evaluation> {
    if workers <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(|&(c, b, s)| objective.evaluate(c, b, s)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Evaluation>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, b, s)) = jobs.get(i) else { break };
                let e = objective.evaluate(c, b, s);
                slots.lock().unwrap()[i] = Some(e);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|e| e.expect("every job evaluated")).collect()
}

/// Proposal from the highest budget with enough successful trials, else
/// uniform.
fn propose<S: SearchSpace + ?Sized, C>(space: &S, trials: &[Trial<C>], kde: KdeSettings, rng: &mut Rng) -> Vec<f64> {
    let conditional = space.conditional();
    let need = space.dims().len() + 2;
    let mut budgets: Vec<usize> = trials.iter().map(|t| t.budget).collect();
    budgets.sort_unstable();
    budgets.dedup();
    for &b in budgets.iter().rev() {
        let at: Vec<&Trial<C>> = trials.iter().filter(|t| t.budget == b).collect();
        if at.iter().filter(|t| t.status == Status::Ok).count() < need {
            continue;
        }
        let points: Vec<Vec<f64>> = at.iter().map(|t| t.point.clone()).collect();
        let losses: Vec<f64> = at.iter().map(|t| if t.status == Status::Ok { t.val_loss } else { f64::INFINITY }).collect();
        match KdeModel::fit(&points, &losses, &conditional, kde) {
            Ok(model) => {
                use rand::Rng as _;
                if rng.random::<f64>() < kde.random_fraction {
                    break;
                }
                return model.propose(space, rng);
            }
            Err(HpoError::InsufficientData { .. }) => continue,
            Err(_) => break,
        }
    }
    sample_random(space, rng)
}

fn best_at<C>(trials: &[Trial<C>], budget: usize) -> Option<usize> {
    trials
        .iter()
        .enumerate()
        .filter(|(_, t)| t.budget == budget && t.status == Status::Ok && t.val_loss.is_finite())
        .min_by(|(i, a), (j, b)| a.val_loss.total_cmp(&b.val_loss).then(i.cmp(j)))
        .map(|(i, _)| i)
}

/// Hyperband brackets with KDE proposals. `on_trial` sees every trial as
/// soon as its rung completes.
pub fn run_bohb<S, O>(
    space: &S,
    objective: &O,
    settings: &BohbSettings,
    mut on_trial: impl FnMut(&Trial<S::Config>),
) -> Result<BohbResult<S::Config>>
where
    S: SearchSpace + ?Sized,
    S::Config: Clone + Sync,
    O: Objective<S::Config> + ?Sized,
{
    let schedule = hyperband_schedule(settings.min_budget, settings.max_budget, settings.eta)?;
    let mut rng = stream(settings.seed, "bohb", 0);
    let mut trials: Vec<Trial<S::Config>> = Vec::new();
    let mut bracket_no = 0;
    let mut config_no = 0;
    for it in 0..settings.iterations {
        for bracket in schedule.iteration(it, settings.mode) {
            let n = bracket.rungs[0].n_configs;
            let points: Vec<Vec<f64>> = (0..n).map(|_| propose(space, &trials, settings.kde, &mut rng)).collect();
            let configs: Vec<S::Config> = points.iter().map(|p| space.decode(p)).collect();
            let ids: Vec<usize> = (config_no..config_no + n).collect();
            config_no += n;
            successive_halving(n, &bracket.rungs, |r, members| {
                let budget = bracket.rungs[r].budget;
                let seeds: Vec<u64> = members.iter().map(|&m| derive_seed(settings.seed, "trial", ids[m] as u64)).collect();
                let jobs: Vec<(&S::Config, usize, u64)> =
                    members.iter().zip(&seeds).map(|(&m, &s)| (&configs[m], budget, s)).collect();
                let results = evaluate_all(objective, &jobs, settings.workers);
                for ((&m, &seed), e) in members.iter().zip(&seeds).zip(&results) {
                    let trial = Trial {
                        id: trials.len(),
                        bracket: bracket_no,
                        rung: r,
                        budget,
                        config_id: ids[m],
                        seed,
                        point: points[m].clone(),
                        config: configs[m].clone(),
                        status: e.status,
                        val_loss: e.rank_loss(),
                        val_score: e.val_score,
                        wall_seconds: e.wall_seconds,
                    };
                    on_trial(&trial);
                    trials.push(trial);
                }
                results
            });
            bracket_no += 1;
        }
    }
    let incumbent = best_at(&trials, settings.max_budget);
    Ok(BohbResult { trials, incumbent })
}

/// Uniform sampling at the maximum budget until `total_epochs` is spent.
pub fn random_search<S, O>(
    space: &S,
    objective: &O,
    total_epochs: usize,
    max_budget: usize,
    seed: u64,
) -> BohbResult<S::Config>
where
    S: SearchSpace + ?Sized,
    O: Objective<S::Config> + ?Sized,
{
    let mut rng = stream(seed, "random-search", 0);
    let trials: Vec<Trial<S::Config>> = (0..total_epochs / max_budget)
        .map(|i| {
            let point = sample_random(space, &mut rng);
            let config = space.decode(&point);
            let trial_seed = derive_seed(seed, "trial", i as u64);
            let e = objective.evaluate(&config, max_budget, trial_seed);
            Trial {
                id: i,
                bracket: i,
                rung: 0,
                budget: max_budget,
                config_id: i,
                seed: trial_seed,
                point,
                config,
                status: e.status,
                val_loss: e.rank_loss(),
                val_score: e.val_score,
                wall_seconds: e.wall_seconds,
            }
        })
        .collect();
    let incumbent = best_at(&trials, max_budget);
    BohbResult { trials, incumbent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::space::UnitInterval;

    fn toy(x: &f64, _: usize, _: u64) -> Evaluation {
        Evaluation::ok((x - 0.3).powi(2), 0.0)
    }

    #[test]
    fn promotion_rules() {
        let r = [Evaluation::ok(0.3, 0.0), Evaluation::ok(0.1, 0.0), Evaluation::ok(0.2, 0.0)];
        assert_eq!(promote(&r, 1), [1]);
        let r = [Evaluation::failed(), Evaluation::ok(9.0, 0.0), Evaluation::failed()];
        assert_eq!(promote(&r, 1), [1]);
        let r = [Evaluation::ok(0.5, 0.0), Evaluation::ok(0.5, 0.0), Evaluation::ok(0.5, 0.0)];
        assert_eq!(promote(&r, 2), [0, 1]);
    }

    #[test]
    fn halving_single_config_survives() {
        let rungs = [Rung { budget: 16, n_configs: 1 }, Rung { budget: 50, n_configs: 1 }];
        let seen = successive_halving(1, &rungs, |_, ids| ids.iter().map(|_| Evaluation::ok(1.0, 0.0)).collect());
        assert_eq!(seen, [vec![0], vec![0]]);
    }

    #[test]
    fn budget_accounting_and_reproducibility() {
        let space = UnitInterval::default();
        let settings = BohbSettings { iterations: 5, seed: 4, ..BohbSettings::default() };
        let a = run_bohb(&space, &toy, &settings, |_| {}).unwrap();
        assert_eq!(a.total_epochs(), 5 * 198);
        let b = run_bohb(&space, &toy, &BohbSettings { workers: 3, ..settings.clone() }, |_| {}).unwrap();
        let xs = |r: &BohbResult<f64>| r.trials.iter().map(|t| (t.config, t.budget, t.seed)).collect::<Vec<_>>();
        assert_eq!(xs(&a), xs(&b));
        let none = run_bohb(&space, &toy, &BohbSettings { iterations: 0, ..settings }, |_| {}).unwrap();
        assert!(none.trials.is_empty() && none.incumbent.is_none());
    }
}
