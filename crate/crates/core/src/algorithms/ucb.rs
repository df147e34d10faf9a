use crate::error::{Error, Result};
use crate::rng::RandomSource;

use super::{argmax_first, Mode, Sampler};

/// UCB1 on rewards `−f`.
///
/// The first `S` iterations pull every state once in index order. Afterwards
/// the state maximizing `−m_i + sqrt(2 ln n / n_i)` is pulled, ties to the
/// smallest index. In adaptive mode counts and sums are discounted by
/// `1−μ` each iteration (discounted UCB) and `n` is the discounted total.
///
/// The estimate is the state with the lowest (discounted) sample mean, not
/// the most pulled one.
#[derive(Debug, Clone)]
pub struct Ucb {
    counts: Vec<f64>,
    sums: Vec<f64>,
    mode: Mode,
    pulls: u64,
    pending: Option<usize>,
    index: Vec<f64>,
}

impl Ucb {
    pub fn new(num_states: usize, mode: Mode) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::config("problem.num_states", "must be at least 1"));
        }
        if let Mode::Adaptive { mu } = mode {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::config("mu", format!("must lie in (0, 1), got {mu}")));
            }
        }
        Ok(Ucb {
            counts: vec![0.0; num_states],
            sums: vec![0.0; num_states],
            mode,
            pulls: 0,
            pending: None,
            index: vec![0.0; num_states],
        })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn mean(&self, state: usize) -> Option<f64> {
        (self.counts[state] > 0.0).then(|| self.sums[state] / self.counts[state])
    }

    /// The state UCB would pull next.
    pub fn next_pull(&mut self) -> usize {
        let n = self.counts.len();
        if (self.pulls as usize) < n {
            return self.pulls as usize;
        }
        let total: f64 = self.counts.iter().sum();
        let log_total = total.max(1.0).ln();
        for i in 0..n {
            let reward = -self.sums[i] / self.counts[i];
            self.index[i] = reward + (2.0 * log_total / self.counts[i]).sqrt();
        }
        argmax_first(&self.index)
    }
}

impl Sampler for Ucb {
    fn name(&self) -> &'static str {
        "UCB"
    }

    fn num_states(&self) -> usize {
        self.counts.len()
    }

    fn evaluations_per_iteration(&self) -> usize {
        1
    }

    fn propose(&mut self, _rng: &mut RandomSource) -> Result<usize> {
        if self.pending.is_some() {
            return Err(Error::InvalidInput("propose called twice without observe".into()));
        }
        let s = self.next_pull();
        self.pending = Some(s);
        Ok(s)
    }

    fn observe(&mut self, state: usize, value: f64) -> Result<()> {
        if self.pending != Some(state) {
            return Err(Error::InvalidInput(format!("observed state {state} was not the pending proposal")));
        }
        self.pending = None;
        if let Mode::Adaptive { mu } = self.mode {
            for (c, s) in self.counts.iter_mut().zip(&mut self.sums) {
                *c *= 1.0 - mu;
                *s *= 1.0 - mu;
            }
        }
        self.counts[state] += 1.0;
        self.sums[state] += value;
        self.pulls += 1;
        Ok(())
    }

    fn estimate(&self) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.counts.len() {
            if let Some(m) = self.mean(i) {
                if best.is_none_or(|(_, b)| m < b) {
                    best = Some((i, m));
                }
            }
        }
        best.map_or(0, |(i, _)| i)
    }
}
