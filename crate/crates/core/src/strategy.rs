//! Smooth best-response sampling and the belief recursion.
//!
//! Beliefs `f̃` are importance-weighted, exponentially averaged estimates of
//! the objective value of every state. The sampling strategy is the logit
//! (entropy-perturbed) best response to those beliefs:
//!
//! ```text
//! b_i = exp(-f̃_i / γ) / Σ_j exp(-f̃_j / γ)
//! ```
//!
//! and after sampling `s` and observing `f`, every belief is pulled toward
//! `g_i = f / b_i · 1{s = i}` with step size `μ`.

use crate::error::{Error, Result};
use crate::rng::{uniform, RandomSource};

/// Importance weights below this are rejected by [`belief_update`].
pub const DEGENERATE_PROBABILITY: f64 = 1e-300;

/// Tolerance on `Σ probs = 1` accepted by [`SamplingDistribution::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    values: Vec<f64>,
    step_size: f64,
    exploration: f64,
}

impl BeliefVector {
    /// Beliefs initialised at zero, as the search starts.
    pub fn zeros(num_states: usize, step_size: f64, exploration: f64) -> Result<Self> {
        Self::from_values(vec![0.0; num_states], step_size, exploration)
    }

    pub fn from_values(values: Vec<f64>, step_size: f64, exploration: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "belief vector needs at least 2 states, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("belief entry {i} is not finite")));
        }
        check_step_size(step_size)?;
        check_exploration(exploration)?;
        Ok(BeliefVector {
            values,
            step_size,
            exploration,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn exploration(&self) -> f64 {
        self.exploration
    }

    pub fn set_step_size(&mut self, step_size: f64) -> Result<()> {
        check_step_size(step_size)?;
        self.step_size = step_size;
        Ok(())
    }

    pub fn set_exploration(&mut self, exploration: f64) -> Result<()> {
        check_exploration(exploration)?;
        self.exploration = exploration;
        Ok(())
    }

    /// In-place form of [`belief_update`].
    pub fn update(&mut self, sampled: usize, observation: f64, dist: &SamplingDistribution) -> Result<()> {
        if sampled >= self.values.len() || dist.len() != self.values.len() {
            return Err(Error::InvalidInput(format!(
                "sampled state {sampled} / distribution length {} do not match {} beliefs",
                dist.len(),
                self.values.len()
            )));
        }
        if !observation.is_finite() {
            return Err(Error::InvalidInput("observation is not finite".into()));
        }
        let p = dist.probs[sampled];
        if p < DEGENERATE_PROBABILITY {
            return Err(Error::NumericDegeneracy(format!(
                "sampling probability {p:e} of state {sampled} is too small to importance-weight"
            )));
        }
        let mu = self.step_size;
        for v in &mut self.values {
            *v *= 1.0 - mu;
        }
        self.values[sampled] += mu * observation / p;
        Ok(())
    }
}

fn check_step_size(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidInput(format!("step size must lie in (0, 1], got {mu}")));
    }
    Ok(())
}

fn check_exploration(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "exploration parameter must be positive and finite, got {gamma}"
        )));
    }
    Ok(())
}

/// A point in the interior of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
}

impl SamplingDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "probability {i} = {} is not strictly positive",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        Ok(SamplingDistribution { probs })
    }

    pub fn uniform(num_states: usize) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        Ok(SamplingDistribution {
            probs: vec![1.0 / num_states as f64; num_states],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Recomputes the logit distribution in place, reusing the buffer.
    pub(crate) fn refresh_logit(&mut self, values: &[f64], exploration: f64) -> Result<()> {
        logit_into(values, exploration, &mut self.probs)
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Inverse-CDF lookup of a uniform variate `u ∈ [0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // u fell in the rounding gap above the last cumulative sum
        self.probs.len() - 1
    }
}

/// A strictly concave perturbation of the linear expected cost. Its smooth
/// best response is `argmin_σ Σ σ_i f̃_i − γ ρ(σ)` over the simplex.
pub trait PerturbationFunction {
    fn evaluate(&self, sigma: &[f64]) -> f64;

    fn best_response(&self, beliefs: &[f64], exploration: f64) -> Result<SamplingDistribution>;
}

/// `ρ(σ) = −Σ σ_i ln σ_i`; its best response is the logit rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Entropy;

impl PerturbationFunction for Entropy {
    fn evaluate(&self, sigma: &[f64]) -> f64 {
        -sigma
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| s * s.ln())
            .sum::<f64>()
    }

    fn best_response(&self, beliefs: &[f64], exploration: f64) -> Result<SamplingDistribution> {
        logit(beliefs, exploration)
    }
}

/// Logit choice over `values` at temperature `exploration`.
///
/// The exponent is shifted by its maximum, so no positive argument is ever
/// exponentiated and the result is invariant under `values + c·1`. Entries
/// that underflow are floored at the smallest normal `f64` to keep the
/// distribution interior.
pub fn logit(values: &[f64], exploration: f64) -> Result<SamplingDistribution> {
    let mut probs = Vec::with_capacity(values.len());
    logit_into(values, exploration, &mut probs)?;
    Ok(SamplingDistribution { probs })
}

fn logit_into(values: &[f64], exploration: f64, out: &mut Vec<f64>) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty belief vector".into()));
    }
    check_exploration(exploration)?;
    let mut min = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("belief entry {i} is not finite")));
        }
        min = min.min(*v);
    }
    out.clear();
    let mut total = 0.0;
    for v in values {
        // -(v - min)/γ ≤ 0
        let w = (-(v - min) / exploration).exp();
        total += w;
        out.push(w);
    }
    for w in out.iter_mut() {
        *w = (*w / total).max(f64::MIN_POSITIVE);
    }
    Ok(())
}

pub fn smooth_best_response(beliefs: &BeliefVector) -> Result<SamplingDistribution> {
    logit(&beliefs.values, beliefs.exploration)
}

/// Draws a state by inverse CDF; consumes exactly one uniform variate.
pub fn sample_state(dist: &SamplingDistribution, rng: &mut RandomSource) -> usize {
    dist.sample_with(uniform(rng))
}

/// `f̃' = f̃ + μ (g − f̃)` with `g_i = observation / probs[i] · 1{sampled = i}`.
///
/// `dist` must be the distribution `sampled` was drawn from.
pub fn belief_update(
    beliefs: &BeliefVector,
    sampled: usize,
    observation: f64,
    dist: &SamplingDistribution,
) -> Result<BeliefVector> {
    let mut next = beliefs.clone();
    next.update(sampled, observation, dist)?;
    Ok(next)
}

/// Decreasing step size and exploration for the static problem:
/// `μ_n = 1/(n+1)` and `γ_n = 1/max(n,1)^α`.
pub fn decreasing_schedules(n: u64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let mu = 1.0 / (n as f64 + 1.0);
    let gamma = (n.max(1) as f64).powf(-alpha);
    Ok((mu, gamma))
}

/// Step size `μ_n` as a function of the number of completed iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `μ_n = 1/(n+1)`
    Harmonic,
}

impl StepRule {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            StepRule::Constant(mu) => mu,
            StepRule::Harmonic => 1.0 / (n as f64 + 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Constant(mu) if !(mu > 0.0 && mu <= 1.0) => {
                Err(Error::config("mu", format!("must lie in (0, 1], got {mu}")))
            }
            _ => Ok(()),
        }
    }
}

/// Exploration `γ_n` as a function of the number of completed iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationRule {
    Constant(f64),
    /// `γ_n = 1/max(n,1)^α`
    Power { alpha: f64 },
}

impl ExplorationRule {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            ExplorationRule::Constant(gamma) => gamma,
            ExplorationRule::Power { alpha } => (n.max(1) as f64).powf(-alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ExplorationRule::Constant(g) if !(g > 0.0 && g.is_finite()) => {
                Err(Error::config("gamma", format!("must be positive, got {g}")))
            }
            ExplorationRule::Power { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

/// Lower bound on every logit probability: `exp(−(max f̃ − min f̃)/γ) / S`.
pub fn interior_floor(values: &[f64], exploration: f64) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (-(hi - lo) / exploration).exp() / values.len() as f64
}
