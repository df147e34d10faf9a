//! TOML experiment configuration.
//!
//! A file has four sections, all optional:
//!
//! ```toml
//! [problem]      # objective: kind, lambda / means, num_states, ...
//! [algorithm]    # names, mode, mu, gamma, alpha, budget
//! [hypermodel]   # regime schedule: fixed, markov, scripted or path
//! [report]       # horizon, replications, checkpoints, seed, sweeps
//! ```
//!
//! Missing keys take the defaults below.

use std::path::Path;

use serde::Deserialize;

use crate::algorithms::{AlgorithmKind, AlgorithmSpec, Mode};
use crate::error::{Error, Result};
use crate::hypermodel::{GeneratorMatrix, Hypermodel};
use crate::problems::{
    CorrelatedNoiseObjective, DeterministicObjective, ObjectiveModel, PoissonOrderSize, DEFAULT_TIE_TOLERANCE,
};
use crate::simulation::{Budget, RegimeSchedule};
use crate::strategy::{ExplorationRule, StepRule};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub algorithm: AlgorithmConfig,
    pub hypermodel: HypermodelConfig,
    pub report: ReportConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Poisson,
    Deterministic,
    Ar1,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Poisson rate per regime.
    pub lambda: Vec<f64>,
    pub num_states: usize,
    /// `means[θ][s]` for the deterministic and AR(1) objectives.
    pub means: Vec<Vec<f64>>,
    pub phi: f64,
    pub sigma_w: f64,
    pub tie_tolerance: f64,
    /// `(λ, S)` cells for `table1`; empty means the single cell above.
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub lambda: f64,
    pub num_states: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            kind: ProblemKind::Poisson,
            lambda: vec![1.0],
            num_states: 11,
            means: Vec::new(),
            phi: 0.0,
            sigma_w: 0.0,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            cells: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Static,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetUnit {
    Iterations,
    Evaluations,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// Any of `AS`, `RS`, `UCB` (case-insensitive).
    pub names: Vec<String>,
    pub mode: ModeName,
    /// Step size in adaptive mode.
    pub mu: f64,
    /// Constant exploration for AS.
    pub gamma: f64,
    /// If set, AS explores with `γ_n = 1/n^α` instead of the constant `gamma`.
    pub alpha: Option<f64>,
    pub budget: BudgetUnit,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            names: vec!["AS".into(), "RS".into(), "UCB".into()],
            mode: ModeName::Static,
            mu: 0.01,
            gamma: 0.1,
            alpha: None,
            budget: BudgetUnit::Iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Fixed,
    Markov,
    Scripted,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypermodelConfig {
    pub kind: ScheduleKind,
    /// Fixed regime, or the starting regime of a scripted schedule.
    pub regime: usize,
    /// Dense generator `Q`, one inner array per row.
    pub generator: Vec<Vec<f64>>,
    /// Defaults to `algorithm.mu` (clocks coupled, `ε = μ`).
    pub epsilon: Option<f64>,
    pub initial_dist: Option<Vec<f64>>,
    /// `[iteration, regime]` pairs for a scripted schedule.
    pub switches: Vec<(u64, usize)>,
}

impl Default for HypermodelConfig {
    fn default() -> Self {
        HypermodelConfig {
            kind: ScheduleKind::Fixed,
            regime: 0,
            generator: Vec::new(),
            epsilon: None,
            initial_dist: None,
            switches: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub horizon: u64,
    pub replications: usize,
    /// Budget points recorded in traces; empty means every `trace_every`
    /// iterations, or the horizon alone.
    pub checkpoints: Vec<u64>,
    pub trace_every: Option<u64>,
    pub seed: u64,
    pub burn_in: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub keep_z: bool,
    /// `example2`: iteration of the forced regime switch.
    pub switch_at: u64,
    /// `example2`: iterations after the switch allowed for re-convergence.
    pub jump_window: u64,
    /// `example2`: use a random Markov path for the trace scenario instead
    /// of the scripted switch.
    pub random_switching: bool,
    /// `example2`: ε values of the efficiency sweep.
    pub epsilons: Vec<f64>,
    pub sweep_horizon: u64,
    /// `example2`: run the sweep at 10^6 iterations.
    pub full_scale: bool,
    /// `ode-check`: step sizes of the tracking sweep.
    pub mus: Vec<f64>,
    /// `ode-check`: interpolated-time horizon.
    pub ode_horizon: f64,
    /// `ode-check`: largest sup gap accepted at the smallest step.
    pub gap_tolerance: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            horizon: 10_000,
            replications: 100,
            checkpoints: Vec::new(),
            trace_every: None,
            seed: 0,
            burn_in: 0,
            threads: 0,
            keep_z: false,
            switch_at: 1000,
            jump_window: 5000,
            random_switching: false,
            epsilons: vec![1e-4, 1e-3, 1e-2, 1e-1],
            sweep_horizon: 100_000,
            full_scale: false,
            mus: vec![0.05, 0.01, 0.001],
            ode_horizon: 5.0,
            gap_tolerance: 0.05,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.report;
        if r.horizon < 1 {
            return Err(Error::config("report.horizon", "must be at least 1"));
        }
        if r.replications < 1 {
            return Err(Error::config("report.replications", "must be at least 1"));
        }
        if r.checkpoints.iter().any(|&c| c < 1 || c > r.horizon) {
            return Err(Error::config("report.checkpoints", format!("must lie in [1, {}]", r.horizon)));
        }
        if r.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("report.checkpoints", "must be strictly increasing"));
        }
        if r.trace_every == Some(0) {
            return Err(Error::config("report.trace_every", "must be at least 1"));
        }
        if r.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::config("report.epsilons", "must be non-negative"));
        }
        if r.mus.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) {
            return Err(Error::config("report.mus", "must lie in (0, 1]"));
        }
        self.algorithm_specs()?;
        let objective = self.objective()?;
        if self.problem.cells.is_empty() && objective.num_states() < 2 {
            return Err(Error::config("problem.num_states", "the samplers need at least 2 states"));
        }
        if !self.problem.cells.is_empty() {
            for cell in &self.problem.cells {
                PoissonOrderSize::new(vec![cell.lambda], cell.num_states)
                    .map_err(|e| Error::config("problem.cells", e.to_string()))?;
            }
        }
        self.schedule(self.mode())?;
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        match self.algorithm.mode {
            ModeName::Static => Mode::Static,
            ModeName::Adaptive => Mode::Adaptive { mu: self.algorithm.mu },
        }
    }

    pub fn exploration(&self) -> ExplorationRule {
        match self.algorithm.alpha {
            Some(alpha) => ExplorationRule::Power { alpha },
            None => ExplorationRule::Constant(self.algorithm.gamma),
        }
    }

    pub fn budget(&self, amount: u64) -> Budget {
        match self.algorithm.budget {
            BudgetUnit::Iterations => Budget::Iterations(amount),
            BudgetUnit::Evaluations => Budget::Evaluations(amount),
        }
    }

    pub fn algorithm_specs(&self) -> Result<Vec<AlgorithmSpec>> {
        let a = &self.algorithm;
        if a.names.is_empty() {
            return Err(Error::config("algorithm.names", "list at least one algorithm"));
        }
        let mode = self.mode();
        if let Mode::Adaptive { mu } = mode {
            StepRule::Constant(mu).validate().map_err(|_| Error::config("algorithm.mu", format!("must lie in (0, 1], got {mu}")))?;
        }
        let exploration = self.exploration();
        exploration.validate().map_err(|e| match a.alpha {
            Some(_) => Error::config("algorithm.alpha", e.to_string()),
            None => Error::config("algorithm.gamma", e.to_string()),
        })?;
        a.names
            .iter()
            .map(|n| {
                let kind = match n.to_ascii_uppercase().as_str() {
                    "AS" => AlgorithmKind::AdaptiveSearch,
                    "RS" => AlgorithmKind::RandomSearch,
                    "UCB" => AlgorithmKind::Ucb,
                    other => return Err(Error::config("algorithm.names", format!("unknown algorithm `{other}`"))),
                };
                Ok(AlgorithmSpec { kind, mode, exploration })
            })
            .collect()
    }

    pub fn objective(&self) -> Result<Box<dyn ObjectiveModel>> {
        let p = &self.problem;
        if !(p.tie_tolerance >= 0.0) {
            return Err(Error::config("problem.tie_tolerance", "must be non-negative"));
        }
        Ok(match p.kind {
            ProblemKind::Poisson => Box::new(PoissonOrderSize::new(p.lambda.clone(), p.num_states)?),
            ProblemKind::Deterministic => Box::new(DeterministicObjective::new(p.means.clone())?),
            ProblemKind::Ar1 => Box::new(CorrelatedNoiseObjective::new(p.means.clone(), p.phi, p.sigma_w)?),
        })
    }

    pub fn generator(&self) -> Result<GeneratorMatrix> {
        GeneratorMatrix::new(self.hypermodel.generator.clone())
            .map_err(|e| Error::config("hypermodel.generator", e.to_string()))
    }

    /// Hypermodel with step `epsilon`.
    pub fn hypermodel(&self, epsilon: f64) -> Result<Hypermodel> {
        Hypermodel::new(self.generator()?, epsilon, self.hypermodel.initial_dist.clone())
            .map_err(|e| Error::config("hypermodel.epsilon", e.to_string()))
    }

    /// Regime schedule as configured; a Markov schedule defaults to `ε = μ`.
    pub fn schedule(&self, mode: Mode) -> Result<RegimeSchedule> {
        let h = &self.hypermodel;
        Ok(match h.kind {
            ScheduleKind::Fixed => RegimeSchedule::Fixed(h.regime),
            ScheduleKind::Scripted => RegimeSchedule::Scripted {
                initial: h.regime,
                switches: h.switches.clone(),
            },
            ScheduleKind::Markov => {
                let eps = match (h.epsilon, mode) {
                    (Some(e), _) => e,
                    (None, Mode::Adaptive { mu }) => mu,
                    (None, Mode::Static) => {
                        return Err(Error::config("hypermodel.epsilon", "required when algorithm.mode = \"static\""))
                    }
                };
                RegimeSchedule::Markov(self.hypermodel(eps)?)
            }
        })
    }

    /// Checkpoints of the trace, in budget units.
    pub fn checkpoints(&self) -> Vec<u64> {
        let r = &self.report;
        if !r.checkpoints.is_empty() {
            return r.checkpoints.clone();
        }
        match r.trace_every {
            Some(k) => {
                let mut c: Vec<u64> = (1..=r.horizon / k).map(|i| i * k).collect();
                if c.last() != Some(&r.horizon) {
                    c.push(r.horizon);
                }
                c
            }
            None => vec![r.horizon],
        }
    }
}
