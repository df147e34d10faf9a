use crate::problems::Optima;
use crate::strategy::StepRule;

/// Discounted realized objective `f̄`, empirical sampling distribution `z`
/// and regret `r = f̄ − F_min(θ)`, all updated with the same weight `μ_n`.
///
/// Starts from `f̄(0) = 0`, `z(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsState {
    bar_f: f64,
    z: Vec<f64>,
    regret: f64,
    iterations: u64,
    step: StepRule,
}

impl MetricsState {
    pub fn new(num_states: usize, step: StepRule) -> Self {
        MetricsState {
            bar_f: 0.0,
            z: vec![0.0; num_states],
            regret: 0.0,
            iterations: 0,
            step,
        }
    }

    /// Regret before any sample, `0 − F_min`.
    pub fn with_initial_regret(mut self, f_min: f64) -> Self {
        self.regret = self.bar_f - f_min;
        self
    }

    pub fn update(&mut self, sampled: usize, observation: f64, f_min: f64) {
        let mu = self.step.at(self.iterations);
        self.bar_f = (1.0 - mu) * self.bar_f + mu * observation;
        for zi in &mut self.z {
            *zi *= 1.0 - mu;
        }
        self.z[sampled] += mu;
        self.regret = self.bar_f - f_min;
        self.iterations += 1;
    }

    pub fn bar_f(&self) -> f64 {
        self.bar_f
    }

    pub fn regret(&self) -> f64 {
        self.regret
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn z_sum(&self) -> f64 {
        self.z.iter().sum()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Share of (normalized) sampling effort spent outside `optima`; 1 before
    /// any sample.
    pub fn efficiency_loss(&self, optima: &Optima) -> f64 {
        let total = self.z_sum();
        if total <= 0.0 {
            return 1.0;
        }
        let inside: f64 = optima.states.iter().map(|&s| self.z[s]).sum();
        (1.0 - inside / total).clamp(0.0, 1.0)
    }

    /// `1 − Σ_{S*} z_i` on the raw, unnormalized `z`.
    pub fn raw_efficiency_loss(&self, optima: &Optima) -> f64 {
        1.0 - optima.states.iter().map(|&s| self.z[s]).sum::<f64>()
    }
}

pub fn metrics_update(m: &MetricsState, sampled: usize, observation: f64, f_min: f64) -> MetricsState {
    let mut next = m.clone();
    next.update(sampled, observation, f_min);
    next
}

pub fn efficiency(m: &MetricsState, optima: &Optima) -> f64 {
    m.efficiency_loss(optima)
}

/// `Σ_i π_i (F_i − F_min)`.
pub fn optimality_gap(pi: &[f64], means: &[f64], f_min: f64) -> f64 {
    pi.iter().zip(means).map(|(p, m)| p * (m - f_min)).sum()
}

/// Membership of `π` in the set of simplex points whose mean optimality gap
/// is at most `η`.
pub fn in_upsilon(pi: &[f64], means: &[f64], f_min: f64, eta: f64) -> bool {
    optimality_gap(pi, means, f_min) <= eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::optima_of;

    #[test]
    fn constant_observation_geometric_series() {
        let mu = 0.05;
        let c = -0.7;
        let mut m = MetricsState::new(2, StepRule::Constant(mu));
        for n in 1..=300 {
            m.update(1, c, -1.0);
            let expected = c * (1.0 - (1.0 - mu).powi(n));
            assert!((m.bar_f() - expected).abs() < 1e-12);
            assert!((m.regret() - (expected + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn z_concentrates_on_repeated_state() {
        let mu = 0.1;
        let mut m = MetricsState::new(3, StepRule::Constant(mu));
        for n in 1..=50 {
            m.update(0, 0.0, 0.0);
            assert!((m.z()[0] - (1.0 - (1.0 - mu).powi(n))).abs() < 1e-12);
            assert_eq!(m.z()[1], 0.0);
        }
        let opt = optima_of(&[-1.0, 0.0, 0.0], 1e-12);
        assert!(m.efficiency_loss(&opt).abs() < 1e-12);
    }

    #[test]
    fn harmonic_weights_give_frequencies() {
        let mut m = MetricsState::new(3, StepRule::Harmonic);
        for s in [0, 1, 1, 2, 1] {
            m.update(s, 0.0, 0.0);
        }
        assert!((m.z()[1] - 0.6).abs() < 1e-15);
        assert!((m.z_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_effort_efficiency() {
        let mut m = MetricsState::new(10, StepRule::Constant(0.01));
        for _ in 0..7 {
            for s in 0..10 {
                m.update(s, 0.0, 0.0);
            }
        }
        // not exactly uniform because of discounting; compare to the direct value
        let opt = optima_of(&[-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-12);
        let direct = 1.0 - (m.z()[0] + m.z()[1]) / m.z_sum();
        assert!((m.efficiency_loss(&opt) - direct).abs() < 1e-15);
        assert!((m.efficiency_loss(&opt) - 0.8).abs() < 0.02);
        let before = MetricsState::new(10, StepRule::Constant(0.01));
        assert_eq!(before.efficiency_loss(&opt), 1.0);
    }

    #[test]
    fn upsilon_contains_optimal_vertices() {
        let means = [-0.3, -0.3, 0.1];
        let opt = optima_of(&means, 1e-12);
        for &s in &opt.states {
            let mut pi = [0.0; 3];
            pi[s] = 1.0;
            assert!(in_upsilon(&pi, &means, opt.f_min, 0.0));
        }
        assert!(!in_upsilon(&[0.0, 0.0, 1.0], &means, opt.f_min, 0.39));
        assert!(in_upsilon(&[0.5, 0.0, 0.5], &means, opt.f_min, 0.2));
    }
}
