use super::{HpoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rung {
    pub budget: usize,
    pub n_configs: usize,
}

/// One successive-halving run: `s` is the number of promotions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub s: usize,
    pub rungs: Vec<Rung>,
}

impl Bracket {
    pub fn epochs(&self) -> usize {
        self.rungs.iter().map(|r| r.budget * r.n_configs).sum()
    }
}

/// How an optimizer "iteration" maps onto brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationMode {
    /// Every iteration runs all brackets, `s = s_max` down to `0`.
    #[default]
    FullSweep,
    /// Iteration `i` runs the single bracket `s = s_max - (i mod (s_max + 1))`.
    SingleBracket,
}

impl IterationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FullSweep => "full_sweep",
            Self::SingleBracket => "single_bracket",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::FullSweep, Self::SingleBracket].into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperbandSchedule {
    pub min_budget: usize,
    pub max_budget: usize,
    pub eta: usize,
    /// Ordered `s = s_max` down to `0`.
    pub brackets: Vec<Bracket>,
}

impl HyperbandSchedule {
    pub fn s_max(&self) -> usize {
        self.brackets.len() - 1
    }

    /// Brackets executed by iteration `i` (0-based).
    pub fn iteration(&self, i: usize, mode: IterationMode) -> Vec<&Bracket> {
        match mode {
            IterationMode::FullSweep => self.brackets.iter().collect(),
            IterationMode::SingleBracket => vec![&self.brackets[i % self.brackets.len()]],
        }
    }

    /// Epochs charged by `iterations` iterations.
    pub fn total_epochs(&self, iterations: usize, mode: IterationMode) -> usize {
        (0..iterations).flat_map(|i| self.iteration(i, mode)).map(Bracket::epochs).sum()
    }
}

pub fn hyperband_schedule(min_budget: usize, max_budget: usize, eta: usize) -> Result<HyperbandSchedule> {
    if min_budget < 1 || min_budget >= max_budget || eta < 2 {
        return Err(HpoError::InvalidBudgets { min: min_budget, max: max_budget, eta });
    }
    // Largest s with min * eta^s <= max, i.e. floor(log_eta(max / min)).
    let mut s_max = 0;
    while min_budget * eta.pow(s_max as u32 + 1) <= max_budget {
        s_max += 1;
    }
    let brackets = (0..=s_max)
        .rev()
        .map(|s| {
            let n = ((s_max + 1) * eta.pow(s as u32)).div_ceil(s + 1);
            let mut rungs = Vec::with_capacity(s + 1);
            let mut count = n;
            for i in 0..=s {
                let budget = max_budget / eta.pow((s - i) as u32);
                rungs.push(Rung { budget, n_configs: count });
                count = count.div_ceil(eta);
            }
            Bracket { s, rungs }
        })
        .collect();
    Ok(HyperbandSchedule { min_budget, max_budget, eta, brackets })
}
