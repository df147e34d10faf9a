//! Stochastic objectives with known per-regime means.
//!
//! Every model reports its exact mean `F(s, θ)` alongside a sampler for
//! `f_n(s, θ)`, so the harness can score regret and efficiency against the
//! truth. Samples must lie in `[-1, 1]`.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{uniform, RandomSource};

pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;

/// Largest Poisson rate served by the inversion sampler.
pub const MAX_POISSON_RATE: f64 = 15.0;

pub trait ObjectiveModel: Send {
    fn num_states(&self) -> usize;

    fn num_regimes(&self) -> usize;

    fn true_mean(&self, state: usize, regime: usize) -> f64;

    fn sample(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64;
}

impl<T: ObjectiveModel + ?Sized> ObjectiveModel for Box<T> {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }

    fn num_regimes(&self) -> usize {
        (**self).num_regimes()
    }

    fn true_mean(&self, state: usize, regime: usize) -> f64 {
        (**self).true_mean(state, regime)
    }

    fn sample(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        (**self).sample(state, regime, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optima {
    pub states: Vec<usize>,
    pub f_min: f64,
}

impl Optima {
    pub fn contains(&self, state: usize) -> bool {
        self.states.binary_search(&state).is_ok()
    }
}

/// `S*(θ) = { s : F(s,θ) ≤ F_min(θ) + tie_tol }`.
pub fn true_optima<M: ObjectiveModel + ?Sized>(model: &M, regime: usize, tie_tol: f64) -> Optima {
    let means: Vec<f64> = (0..model.num_states()).map(|s| model.true_mean(s, regime)).collect();
    optima_of(&means, tie_tol)
}

pub fn optima_of(means: &[f64], tie_tol: f64) -> Optima {
    let f_min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let states = means
        .iter()
        .enumerate()
        .filter(|(_, &m)| m <= f_min + tie_tol)
        .map(|(s, _)| s)
        .collect();
    Optima { states, f_min }
}

/// Mean table `F[θ][s]` of a model.
pub fn mean_table<M: ObjectiveModel + ?Sized>(model: &M) -> Vec<Vec<f64>> {
    (0..model.num_regimes())
        .map(|r| (0..model.num_states()).map(|s| model.true_mean(s, r)).collect())
        .collect()
}

/// `ln k!` by direct summation.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Poisson pmf evaluated in log space.
pub fn poisson_pmf(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * rate.ln() - rate - ln_factorial(k)).exp()
}

/// Poisson draw by sequential-search inversion of one uniform `u ∈ [0, 1)`.
pub fn poisson_inverse(rate: f64, u: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-rate).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= rate / k as f64;
        let next = cdf + p;
        if next == cdf {
            // tail mass below f64 resolution
            break;
        }
        cdf = next;
    }
    k
}

/// Order-size problem: pick `s` maximizing `P(d = s)` for Poisson demand
/// `d` with a regime-dependent rate, written as minimization of
/// `−1{d = s}`. States are `0..num_states`.
#[derive(Debug, Clone)]
pub struct PoissonOrderSize {
    rates: Vec<f64>,
    num_states: usize,
    means: Vec<Vec<f64>>,
}

impl PoissonOrderSize {
    pub fn new(rates: Vec<f64>, num_states: usize) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::config("problem.lambda", "needs at least one rate"));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && **r <= MAX_POISSON_RATE)) {
            return Err(Error::config(
                "problem.lambda",
                format!("rate {r} outside (0, {MAX_POISSON_RATE}]"),
            ));
        }
        if num_states == 0 {
            return Err(Error::config("problem.num_states", "must be at least 1"));
        }
        let means = rates
            .iter()
            .map(|&l| (0..num_states).map(|s| -poisson_pmf(s as u64, l)).collect())
            .collect();
        Ok(PoissonOrderSize {
            rates,
            num_states,
            means,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Returns `−1{d = s}`, `d ~ Poisson(λ(θ))`; one uniform per call.
    pub fn poisson_sample(&self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        let d = poisson_inverse(self.rates[regime], uniform(rng));
        if d == state as u64 {
            -1.0
        } else {
            0.0
        }
    }
}

impl ObjectiveModel for PoissonOrderSize {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_regimes(&self) -> usize {
        self.rates.len()
    }

    fn true_mean(&self, state: usize, regime: usize) -> f64 {
        self.means[regime][state]
    }

    fn sample(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        self.poisson_sample(state, regime, rng)
    }
}

/// Zero-variance objective: every sample equals the mean.
#[derive(Debug, Clone)]
pub struct DeterministicObjective {
    means: Vec<Vec<f64>>,
}

impl DeterministicObjective {
    /// `means[θ][s]`.
    pub fn new(means: Vec<Vec<f64>>) -> Result<Self> {
        check_mean_table(&means)?;
        Ok(DeterministicObjective { means })
    }
}

impl ObjectiveModel for DeterministicObjective {
    fn num_states(&self) -> usize {
        self.means[0].len()
    }

    fn num_regimes(&self) -> usize {
        self.means.len()
    }

    fn true_mean(&self, state: usize, regime: usize) -> f64 {
        self.means[regime][state]
    }

    fn sample(&mut self, state: usize, regime: usize, _rng: &mut RandomSource) -> f64 {
        self.means[regime][state]
    }
}

fn check_mean_table(means: &[Vec<f64>]) -> Result<()> {
    let Some(first) = means.first() else {
        return Err(Error::config("problem.means", "needs at least one regime"));
    };
    if first.is_empty() {
        return Err(Error::config("problem.means", "needs at least one state"));
    }
    for (r, row) in means.iter().enumerate() {
        if row.len() != first.len() {
            return Err(Error::config(
                "problem.means",
                format!("regime {r} has {} states, expected {}", row.len(), first.len()),
            ));
        }
        if let Some(m) = row.iter().find(|m| !(m.abs() <= 1.0)) {
            return Err(Error::config("problem.means", format!("mean {m} outside [-1, 1]")));
        }
    }
    Ok(())
}

/// Means perturbed by a stationary AR(1) process per (state, regime):
/// `x_n = φ x_{n−1} + w_n`, `w_n ~ N(0, σ_w²)`, sample `clamp(F + x_n, −1, 1)`.
///
/// Not one of the published examples; it exercises correlated observation
/// noise that still averages out.
#[derive(Debug, Clone)]
pub struct CorrelatedNoiseObjective {
    means: Vec<Vec<f64>>,
    phi: f64,
    sigma_w: f64,
    noise: Vec<Option<f64>>,
}

impl CorrelatedNoiseObjective {
    pub fn new(means: Vec<Vec<f64>>, phi: f64, sigma_w: f64) -> Result<Self> {
        check_mean_table(&means)?;
        if !(0.0..=0.9).contains(&phi) {
            return Err(Error::config("problem.phi", format!("must lie in [0, 0.9], got {phi}")));
        }
        if !(sigma_w >= 0.0 && sigma_w.is_finite()) {
            return Err(Error::config("problem.sigma_w", format!("must be non-negative, got {sigma_w}")));
        }
        let cells = means.len() * means[0].len();
        Ok(CorrelatedNoiseObjective {
            means,
            phi,
            sigma_w,
            noise: vec![None; cells],
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    /// Advances the AR(1) state of `(state, regime)` and returns the
    /// unclamped noise value.
    pub fn next_noise(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        let idx = regime * self.means[0].len() + state;
        let prev = match self.noise[idx] {
            Some(x) => x,
            None => self.gaussian(self.stationary_sd(), rng),
        };
        let x = self.phi * prev + self.gaussian(self.sigma_w, rng);
        self.noise[idx] = Some(x);
        x
    }

    pub fn ar1_sample(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        let x = self.next_noise(state, regime, rng);
        (self.means[regime][state] + x).clamp(-1.0, 1.0)
    }

    fn stationary_sd(&self) -> f64 {
        self.sigma_w / (1.0 - self.phi * self.phi).sqrt()
    }

    fn gaussian(&self, sd: f64, rng: &mut RandomSource) -> f64 {
        if sd == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    }
}

impl ObjectiveModel for CorrelatedNoiseObjective {
    fn num_states(&self) -> usize {
        self.means[0].len()
    }

    fn num_regimes(&self) -> usize {
        self.means.len()
    }

    fn true_mean(&self, state: usize, regime: usize) -> f64 {
        self.means[regime][state]
    }

    fn sample(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        self.ar1_sample(state, regime, rng)
    }
}

/// Counts evaluations passed through to the inner model.
#[derive(Debug, Clone)]
pub struct CountingObjective<M> {
    inner: M,
    evaluations: u64,
}

impl<M: ObjectiveModel> CountingObjective<M> {
    pub fn new(inner: M) -> Self {
        CountingObjective { inner, evaluations: 0 }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: ObjectiveModel> ObjectiveModel for CountingObjective<M> {
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    fn num_regimes(&self) -> usize {
        self.inner.num_regimes()
    }

    fn true_mean(&self, state: usize, regime: usize) -> f64 {
        self.inner.true_mean(state, regime)
    }

    fn sample(&mut self, state: usize, regime: usize, rng: &mut RandomSource) -> f64 {
        self.evaluations += 1;
        self.inner.sample(state, regime, rng)
    }
}
