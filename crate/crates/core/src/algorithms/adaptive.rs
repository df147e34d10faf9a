use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::strategy::{sample_state, BeliefVector, ExplorationRule, SamplingDistribution, StepRule};

use super::{argmax_first, Sampler};

/// Smooth best-response adaptive search.
///
/// Each iteration samples `s ~ b^γ(f̃)`, observes `f(s)`, moves the beliefs
/// with the importance-weighted recursion and discounts the empirical
/// sampling distribution `z`. The estimate is the most frequently sampled
/// state, `argmax z`.
#[derive(Debug, Clone)]
pub struct AdaptiveSearch {
    beliefs: BeliefVector,
    dist: SamplingDistribution,
    z: Vec<f64>,
    step: StepRule,
    exploration: ExplorationRule,
    iterations: u64,
    pending: Option<usize>,
}

impl AdaptiveSearch {
    pub fn new(num_states: usize, step: StepRule, exploration: ExplorationRule) -> Result<Self> {
        step.validate()?;
        exploration.validate()?;
        if num_states < 2 {
            return Err(Error::config("problem.num_states", "adaptive search needs at least 2 states"));
        }
        let beliefs = BeliefVector::zeros(num_states, step.at(0), exploration.at(0))?;
        Ok(AdaptiveSearch {
            beliefs,
            dist: SamplingDistribution::uniform(num_states)?,
            z: vec![0.0; num_states],
            step,
            exploration,
            iterations: 0,
            pending: None,
        })
    }

    /// Constant step size `μ` and exploration `γ`.
    pub fn constant(num_states: usize, mu: f64, gamma: f64) -> Result<Self> {
        Self::new(num_states, StepRule::Constant(mu), ExplorationRule::Constant(gamma))
    }

    /// Decreasing `μ_n = 1/(n+1)` and `γ_n = 1/n^α` for a fixed problem.
    pub fn decreasing(num_states: usize, alpha: f64) -> Result<Self> {
        Self::new(num_states, StepRule::Harmonic, ExplorationRule::Power { alpha })
    }

    pub fn beliefs(&self) -> &BeliefVector {
        &self.beliefs
    }

    /// The distribution used for the most recent proposal.
    pub fn distribution(&self) -> &SamplingDistribution {
        &self.dist
    }

    pub fn empirical_distribution(&self) -> &[f64] {
        &self.z
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }
}

impl Sampler for AdaptiveSearch {
    fn name(&self) -> &'static str {
        "AS"
    }

    fn num_states(&self) -> usize {
        self.z.len()
    }

    fn evaluations_per_iteration(&self) -> usize {
        1
    }

    fn propose(&mut self, rng: &mut RandomSource) -> Result<usize> {
        if self.pending.is_some() {
            return Err(Error::InvalidInput("propose called twice without observe".into()));
        }
        let gamma = self.exploration.at(self.iterations);
        self.beliefs.set_exploration(gamma)?;
        self.dist.refresh_logit(self.beliefs.values(), gamma)?;
        let s = sample_state(&self.dist, rng);
        self.pending = Some(s);
        Ok(s)
    }

    fn observe(&mut self, state: usize, value: f64) -> Result<()> {
        match self.pending.take() {
            Some(s) if s == state => {}
            other => {
                self.pending = other;
                return Err(Error::InvalidInput(format!("observed state {state} was not the pending proposal")));
            }
        }
        let mu = self.step.at(self.iterations);
        self.beliefs.set_step_size(mu)?;
        self.beliefs.update(state, value, &self.dist)?;
        for zi in &mut self.z {
            *zi *= 1.0 - mu;
        }
        self.z[state] += mu;
        self.iterations += 1;
        Ok(())
    }

    fn estimate(&self) -> usize {
        argmax_first(&self.z)
    }
}
