use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomSource;

use super::{argmax_first, Mode, Sampler};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    EvaluateCurrent,
    AwaitCandidate { current_value: f64 },
    EvaluateCandidate { current_value: f64, candidate: usize },
}

/// Global random search baseline.
///
/// One iteration draws a candidate uniformly from the states other than the
/// current one, evaluates current and candidate independently, and moves to
/// the candidate iff its observation is strictly lower. The visit weight of
/// the (new) current state is then incremented, by one in static mode or
/// with exponential discounting `w ← (1−μ)w + μ e_x` in adaptive mode. The
/// estimate is the most visited state.
///
/// The candidate is the state charged as sampling effort.
#[derive(Debug, Clone)]
pub struct RandomSearch {
    current: usize,
    weights: Vec<f64>,
    mode: Mode,
    phase: Phase,
    iterations: u64,
}

impl RandomSearch {
    /// Starts at a uniformly drawn state.
    pub fn new(num_states: usize, mode: Mode, rng: &mut RandomSource) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::config("problem.num_states", "must be at least 1"));
        }
        if let Mode::Adaptive { mu } = mode {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(Error::config("mu", format!("must lie in (0, 1], got {mu}")));
            }
        }
        let current = rng.random_range(0..num_states);
        Ok(Self::starting_at(num_states, mode, current))
    }

    pub fn starting_at(num_states: usize, mode: Mode, current: usize) -> Self {
        RandomSearch {
            current,
            weights: vec![0.0; num_states],
            mode,
            phase: Phase::EvaluateCurrent,
            iterations: 0,
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }
}

impl Sampler for RandomSearch {
    fn name(&self) -> &'static str {
        "RS"
    }

    fn num_states(&self) -> usize {
        self.weights.len()
    }

    fn evaluations_per_iteration(&self) -> usize {
        2
    }

    fn propose(&mut self, rng: &mut RandomSource) -> Result<usize> {
        match self.phase {
            Phase::EvaluateCurrent => Ok(self.current),
            Phase::AwaitCandidate { current_value } => {
                let n = self.weights.len();
                let candidate = if n == 1 {
                    self.current
                } else {
                    let y = rng.random_range(0..n - 1);
                    if y >= self.current {
                        y + 1
                    } else {
                        y
                    }
                };
                self.phase = Phase::EvaluateCandidate {
                    current_value,
                    candidate,
                };
                Ok(candidate)
            }
            Phase::EvaluateCandidate { .. } => {
                Err(Error::InvalidInput("propose called twice without observe".into()))
            }
        }
    }

    fn observe(&mut self, state: usize, value: f64) -> Result<()> {
        match self.phase {
            Phase::EvaluateCurrent if state == self.current => {
                self.phase = Phase::AwaitCandidate { current_value: value };
                Ok(())
            }
            Phase::EvaluateCandidate {
                current_value,
                candidate,
            } if state == candidate => {
                if value < current_value {
                    self.current = candidate;
                }
                match self.mode {
                    Mode::Static => self.weights[self.current] += 1.0,
                    Mode::Adaptive { mu } => {
                        for w in &mut self.weights {
                            *w *= 1.0 - mu;
                        }
                        self.weights[self.current] += mu;
                    }
                }
                self.iterations += 1;
                self.phase = Phase::EvaluateCurrent;
                Ok(())
            }
            _ => Err(Error::InvalidInput(format!("observed state {state} was not the pending proposal"))),
        }
    }

    fn estimate(&self) -> usize {
        argmax_first(&self.weights)
    }
}
