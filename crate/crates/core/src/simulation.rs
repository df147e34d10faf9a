//! One replication: a sampler, an objective and a regime schedule, with the
//! diagnostics of each iteration folded into checkpoint records.

use crate::algorithms::{iterate, AdaptiveSearch, Sampler};
use crate::diagnostics::MetricsState;
use crate::error::{Error, Result};
use crate::hypermodel::{CtmcPath, Hypermodel};
use crate::problems::{true_optima, ObjectiveModel, Optima, DEFAULT_TIE_TOLERANCE};
use crate::rng::{RandomSource, SeedScheme, StreamKind};
use crate::strategy::StepRule;

/// How the hidden regime evolves over iterations `1..=N`.
#[derive(Debug, Clone)]
pub enum RegimeSchedule {
    Fixed(usize),
    /// One step of `I + εQ` between consecutive iterations; the first
    /// iteration runs in a regime drawn from the initial distribution.
    Markov(Hypermodel),
    /// Starts in `initial`; `(n, θ)` switches to `θ` from iteration `n` on.
    Scripted { initial: usize, switches: Vec<(u64, usize)> },
    /// Iteration `n` runs in `path(n · time_step)`.
    Path { path: CtmcPath, time_step: f64 },
}

impl RegimeSchedule {
    fn validate(&self, num_regimes: usize) -> Result<()> {
        let check = |r: usize| {
            if r < num_regimes {
                Ok(())
            } else {
                Err(Error::config("hypermodel", format!("regime {r} out of range for {num_regimes} regimes")))
            }
        };
        match self {
            RegimeSchedule::Fixed(r) => check(*r),
            RegimeSchedule::Markov(h) => {
                if h.num_regimes() != num_regimes {
                    return Err(Error::config(
                        "hypermodel.generator",
                        format!("has {} regimes, problem has {num_regimes}", h.num_regimes()),
                    ));
                }
                Ok(())
            }
            RegimeSchedule::Scripted { initial, switches } => {
                check(*initial)?;
                if switches.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config("hypermodel.switches", "iterations must increase"));
                }
                switches.iter().try_for_each(|&(_, r)| check(r))
            }
            RegimeSchedule::Path { path, time_step } => {
                if !(*time_step > 0.0) {
                    return Err(Error::config("hypermodel.time_step", "must be positive"));
                }
                path.segments().try_for_each(|(_, _, r)| check(r))
            }
        }
    }
}

/// Stateful cursor over a schedule.
struct RegimeClock<'a> {
    schedule: &'a mut RegimeSchedule,
    next_switch: usize,
    current: usize,
}

impl<'a> RegimeClock<'a> {
    fn start(schedule: &'a mut RegimeSchedule, rng: &mut RandomSource) -> Self {
        let current = match schedule {
            RegimeSchedule::Fixed(r) => *r,
            RegimeSchedule::Markov(h) => h.reset(rng),
            RegimeSchedule::Scripted { initial, .. } => *initial,
            RegimeSchedule::Path { path, .. } => path.regime_at(0.0),
        };
        RegimeClock {
            schedule,
            next_switch: 0,
            current,
        }
    }

    /// Regime in force during iteration `n` (1-based). Calls come in order.
    fn at(&mut self, n: u64, rng: &mut RandomSource) -> usize {
        match self.schedule {
            RegimeSchedule::Fixed(_) => {}
            RegimeSchedule::Markov(h) => {
                if n > 1 {
                    self.current = h.step(rng);
                }
            }
            RegimeSchedule::Scripted { switches, .. } => {
                while let Some(&(at, r)) = switches.get(self.next_switch) {
                    if at > n {
                        break;
                    }
                    self.current = r;
                    self.next_switch += 1;
                }
            }
            RegimeSchedule::Path { path, time_step } => {
                self.current = path.regime_at(n as f64 * *time_step);
            }
        }
        self.current
    }
}

/// Run length, counted in iterations or in objective evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    Evaluations(u64),
}

impl Budget {
    pub fn amount(self) -> u64 {
        match self {
            Budget::Iterations(n) | Budget::Evaluations(n) => n,
        }
    }

    /// Iterations afforded by `amount` units for a sampler spending
    /// `evaluations_per_iteration` evaluations per iteration.
    fn iterations(self, amount: u64, evaluations_per_iteration: usize) -> u64 {
        match self {
            Budget::Iterations(_) => amount,
            Budget::Evaluations(_) => amount / evaluations_per_iteration as u64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub budget: Budget,
    /// Points, in budget units, at which a record is taken. Must increase.
    pub checkpoints: Vec<u64>,
    /// Averaging weight of the diagnostics.
    pub metrics_step: StepRule,
    /// Iterations excluded from the time-averaged efficiency loss.
    pub burn_in: u64,
    pub keep_z: bool,
    pub tie_tolerance: f64,
}

impl RunOptions {
    pub fn new(budget: Budget, metrics_step: StepRule) -> Self {
        RunOptions {
            budget,
            checkpoints: vec![budget.amount()],
            metrics_step,
            burn_in: 0,
            keep_z: false,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    /// Checkpoint in budget units.
    pub iteration: u64,
    pub theta: usize,
    pub sampled: usize,
    pub estimate: usize,
    pub regret: f64,
    /// Normalized share of effort outside `S*(θ)`.
    pub efficiency: f64,
    pub converged: bool,
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<CheckpointRecord>,
    pub iterations: u64,
    pub evaluations: u64,
    pub final_estimate: usize,
    /// Efficiency loss averaged over iterations after the burn-in; `NaN` if
    /// none remain.
    pub mean_efficiency_loss: f64,
}

/// Per-replication random streams; the objective stream is shared across
/// algorithms so they face common random numbers.
pub struct RunStreams {
    pub algorithm: RandomSource,
    pub objective: RandomSource,
    pub hypermodel: RandomSource,
}

impl RunStreams {
    pub fn new(seeds: &SeedScheme, replication: u64) -> Self {
        RunStreams {
            algorithm: seeds.stream(replication, StreamKind::Algorithm),
            objective: seeds.stream(replication, StreamKind::Objective),
            hypermodel: seeds.stream(replication, StreamKind::Hypermodel),
        }
    }
}

/// Drives `sampler` against `objective` until the budget runs out.
pub fn simulate(
    sampler: &mut dyn Sampler,
    objective: &mut dyn ObjectiveModel,
    schedule: &mut RegimeSchedule,
    options: &RunOptions,
    streams: &mut RunStreams,
) -> Result<RunTrace> {
    let num_states = objective.num_states();
    if sampler.num_states() != num_states {
        return Err(Error::config(
            "problem.num_states",
            format!("sampler has {} states, objective {num_states}", sampler.num_states()),
        ));
    }
    schedule.validate(objective.num_regimes())?;
    options.metrics_step.validate()?;
    if options.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("report.checkpoints", "must be strictly increasing"));
    }
    if let Some(&last) = options.checkpoints.last() {
        if last > options.budget.amount() {
            return Err(Error::config(
                "report.checkpoints",
                format!("checkpoint {last} exceeds the budget {}", options.budget.amount()),
            ));
        }
    }

    let per_iter = sampler.evaluations_per_iteration();
    let horizon = options.budget.iterations(options.budget.amount(), per_iter);
    let targets: Vec<(u64, u64)> = options
        .checkpoints
        .iter()
        .map(|&c| (options.budget.iterations(c, per_iter), c))
        .collect();
    if let Some(&(0, c)) = targets.first() {
        return Err(Error::config(
            "report.checkpoints",
            format!("checkpoint {c} buys no complete iteration of {}", sampler.name()),
        ));
    }

    let optima: Vec<Optima> = (0..objective.num_regimes())
        .map(|r| true_optima(objective, r, options.tie_tolerance))
        .collect();
    let mut clock = RegimeClock::start(schedule, &mut streams.hypermodel);
    let mut metrics =
        MetricsState::new(num_states, options.metrics_step).with_initial_regret(optima[clock.current].f_min);
    let mut records = Vec::with_capacity(targets.len());
    let mut next_target = 0;
    let mut loss_sum = 0.0;
    let mut loss_count = 0u64;
    let mut evaluations = 0u64;

    for n in 1..=horizon {
        let theta = clock.at(n, &mut streams.hypermodel);
        let obj_rng = &mut streams.objective;
        let rec = iterate(sampler, &mut streams.algorithm, |s| objective.sample(s, theta, obj_rng))?;
        evaluations += rec.evaluations as u64;
        let opt = &optima[theta];
        metrics.update(rec.sampled, rec.observation, opt.f_min);
        let loss = metrics.efficiency_loss(opt);
        if n > options.burn_in {
            loss_sum += loss;
            loss_count += 1;
        }
        while next_target < targets.len() && targets[next_target].0 == n {
            let estimate = sampler.estimate();
            records.push(CheckpointRecord {
                iteration: targets[next_target].1,
                theta,
                sampled: rec.sampled,
                estimate,
                regret: metrics.regret(),
                efficiency: loss,
                converged: opt.contains(estimate),
                z: options.keep_z.then(|| metrics.z().to_vec()),
            });
            next_target += 1;
        }
    }

    Ok(RunTrace {
        records,
        iterations: horizon,
        evaluations,
        final_estimate: sampler.estimate(),
        mean_efficiency_loss: if loss_count > 0 {
            loss_sum / loss_count as f64
        } else {
            f64::NAN
        },
    })
}

/// Adaptive search with `μ_n = 1/(n+1)` and `γ_n = 1/n^α` on regime 0 of a
/// fixed problem, recording the final iteration.
pub fn static_as_run(
    objective: &mut dyn ObjectiveModel,
    alpha: f64,
    horizon: u64,
    streams: &mut RunStreams,
) -> Result<RunTrace> {
    let mut sampler = AdaptiveSearch::decreasing(objective.num_states(), alpha)?;
    let mut options = RunOptions::new(Budget::Iterations(horizon), StepRule::Harmonic);
    if horizon == 0 {
        options.checkpoints.clear();
    }
    simulate(&mut sampler, objective, &mut RegimeSchedule::Fixed(0), &options, streams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{RandomSearch, Ucb, Mode};
    use crate::hypermodel::GeneratorMatrix;
    use crate::problems::{CountingObjective, DeterministicObjective, PoissonOrderSize};

    fn streams(rep: u64) -> RunStreams {
        RunStreams::new(&SeedScheme::new(42), rep)
    }

    #[test]
    fn horizon_zero_estimates_smallest_index() {
        let mut obj = PoissonOrderSize::new(vec![1.0], 11).unwrap();
        let t = static_as_run(&mut obj, 0.2, 0, &mut streams(0)).unwrap();
        assert_eq!(t.final_estimate, 0);
        assert!(t.records.is_empty());
        assert_eq!(t.iterations, 0);
    }

    #[test]
    fn static_run_converges_on_example_one() {
        let mut hits = 0;
        for rep in 0..20 {
            let mut obj = PoissonOrderSize::new(vec![1.0], 11).unwrap();
            let t = static_as_run(&mut obj, 0.2, 10_000, &mut streams(rep)).unwrap();
            hits += usize::from(t.final_estimate <= 1);
        }
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn scripted_switch_applies_from_its_iteration() {
        let mut sched = RegimeSchedule::Scripted {
            initial: 0,
            switches: vec![(3, 1)],
        };
        let mut rng = SeedScheme::new(0).stream(0, StreamKind::Hypermodel);
        let mut clock = RegimeClock::start(&mut sched, &mut rng);
        let seen: Vec<usize> = (1..=5).map(|n| clock.at(n, &mut rng)).collect();
        assert_eq!(seen, vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn evaluation_budget_halves_rs_iterations() {
        let obj = DeterministicObjective::new(vec![vec![-1.0, 0.0, 0.5]]).unwrap();
        let mut counted = CountingObjective::new(obj);
        let mut rs = RandomSearch::starting_at(3, Mode::Static, 2);
        let mut opts = RunOptions::new(Budget::Evaluations(100), StepRule::Harmonic);
        opts.checkpoints = vec![10, 100];
        let t = simulate(&mut rs, &mut counted, &mut RegimeSchedule::Fixed(0), &opts, &mut streams(0)).unwrap();
        assert_eq!(t.iterations, 50);
        assert_eq!(counted.evaluations(), 100);
        assert_eq!(t.records.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![10, 100]);
    }

    #[test]
    fn checkpoint_beyond_budget_is_rejected() {
        let mut obj = DeterministicObjective::new(vec![vec![-1.0, 0.0]]).unwrap();
        let mut u = Ucb::new(2, Mode::Static).unwrap();
        let mut opts = RunOptions::new(Budget::Iterations(10), StepRule::Harmonic);
        opts.checkpoints = vec![5, 11];
        let err = simulate(&mut u, &mut obj, &mut RegimeSchedule::Fixed(0), &opts, &mut streams(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { .. }));
    }

    #[test]
    fn markov_schedule_switches_regimes() {
        let q = GeneratorMatrix::new(vec![vec![-0.5, 0.5], vec![0.5, -0.5]]).unwrap();
        let h = Hypermodel::new(q, 0.1, None).unwrap();
        let mut obj = PoissonOrderSize::new(vec![1.0, 10.0], 11).unwrap();
        let mut a = AdaptiveSearch::constant(11, 0.01, 0.1).unwrap();
        let mut opts = RunOptions::new(Budget::Iterations(2000), StepRule::Constant(0.01));
        opts.checkpoints = (1..=2000).collect();
        let t = simulate(&mut a, &mut obj, &mut RegimeSchedule::Markov(h), &opts, &mut streams(3)).unwrap();
        let thetas: std::collections::BTreeSet<usize> = t.records.iter().map(|r| r.theta).collect();
        assert_eq!(thetas.len(), 2);
        assert!(t.mean_efficiency_loss > 0.0 && t.mean_efficiency_loss < 1.0);
    }
}
