//! Sequential samplers: the adaptive search and its two baselines.
//!
//! Every sampler follows the same contract. `propose` and `observe`
//! alternate; one iteration is `evaluations_per_iteration` such pairs and the
//! last proposal of an iteration is the state charged as that iteration's
//! sampling effort. Samplers never see the regime, only observed values.

mod adaptive;
mod random_search;
mod ucb;

pub use adaptive::AdaptiveSearch;
pub use random_search::RandomSearch;
pub use ucb::Ucb;

use crate::error::Result;
use crate::rng::RandomSource;
use crate::strategy::{ExplorationRule, StepRule};

pub trait Sampler: Send {
    fn name(&self) -> &'static str;

    fn num_states(&self) -> usize;

    fn evaluations_per_iteration(&self) -> usize;

    fn propose(&mut self, rng: &mut RandomSource) -> Result<usize>;

    fn observe(&mut self, state: usize, value: f64) -> Result<()>;

    /// Current guess of a global minimizer.
    fn estimate(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// State charged with this iteration's sampling effort.
    pub sampled: usize,
    pub observation: f64,
    pub evaluations: usize,
}

/// Runs one full iteration, evaluating proposals with `evaluate`.
pub fn iterate<S, F>(sampler: &mut S, rng: &mut RandomSource, mut evaluate: F) -> Result<IterationRecord>
where
    S: Sampler + ?Sized,
    F: FnMut(usize) -> f64,
{
    let k = sampler.evaluations_per_iteration();
    let mut last = (0, 0.0);
    for _ in 0..k {
        let s = sampler.propose(rng)?;
        let v = evaluate(s);
        sampler.observe(s, v)?;
        last = (s, v);
    }
    Ok(IterationRecord {
        sampled: last.0,
        observation: last.1,
        evaluations: k,
    })
}

/// Index of the largest entry; ties go to the smallest index.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    AdaptiveSearch,
    RandomSearch,
    Ucb,
}

impl AlgorithmKind {
    pub fn label(self) -> &'static str {
        match self {
            AlgorithmKind::AdaptiveSearch => "AS",
            AlgorithmKind::RandomSearch => "RS",
            AlgorithmKind::Ucb => "UCB",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            AlgorithmKind::AdaptiveSearch => "as",
            AlgorithmKind::RandomSearch => "rs",
            AlgorithmKind::Ucb => "ucb",
        }
    }
}

/// Whether a sampler targets a fixed problem (decreasing steps, plain counts)
/// or tracks a switching one (constant step `μ`, exponential discounting).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Static,
    Adaptive { mu: f64 },
}

impl Mode {
    /// Averaging weight used for the diagnostics of a run in this mode.
    pub fn metrics_step(self) -> StepRule {
        match self {
            Mode::Static => StepRule::Harmonic,
            Mode::Adaptive { mu } => StepRule::Constant(mu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub mode: Mode,
    /// Exploration for AS; ignored by the baselines.
    pub exploration: ExplorationRule,
}

impl AlgorithmSpec {
    pub fn build(&self, num_states: usize, rng: &mut RandomSource) -> Result<Box<dyn Sampler>> {
        Ok(match self.kind {
            AlgorithmKind::AdaptiveSearch => {
                Box::new(AdaptiveSearch::new(num_states, self.mode.metrics_step(), self.exploration)?)
            }
            AlgorithmKind::RandomSearch => Box::new(RandomSearch::new(num_states, self.mode, rng)?),
            AlgorithmKind::Ucb => Box::new(Ucb::new(num_states, self.mode)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_first(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax_first(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax_first(&[0.0, 0.0]), 0);
    }
}
