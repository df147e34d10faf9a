//! The canned experiments behind the CLI subcommands.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::algorithms::{AlgorithmKind, AlgorithmSpec, Mode};
use crate::diagnostics::{ode_tracking_check, TrackingCheck};
use crate::error::{Error, Result};
use crate::hypermodel::{sample_ctmc_path, CtmcPath};
use crate::problems::{ObjectiveModel, PoissonOrderSize};
use crate::rng::{SeedScheme, StreamKind};
use crate::simulation::{simulate, Budget, RegimeSchedule, RunOptions, RunStreams, RunTrace};

use super::config::{Cell, ExperimentConfig, ProblemKind, ScheduleKind};
use super::report::{format_g9, mean_stderr, wilson_interval, write_csv, FIG4_HEADER, TABLE1_HEADER, TRACE_HEADER};

/// Iterations of each Fig 4 run at full scale.
pub const FULL_SCALE_SWEEP: u64 = 1_000_000;

/// Runs `replications` copies of one algorithm in parallel, in replication
/// order. Objectives and schedules are rebuilt per replication.
pub fn replicate<O, S>(
    spec: &AlgorithmSpec,
    make_objective: O,
    make_schedule: S,
    options: &RunOptions,
    seeds: &SeedScheme,
    replications: usize,
) -> Result<Vec<RunTrace>>
where
    O: Fn() -> Result<Box<dyn ObjectiveModel>> + Sync,
    S: Fn(u64) -> Result<RegimeSchedule> + Sync,
{
    (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut objective = make_objective()?;
            let mut schedule = make_schedule(rep)?;
            let mut streams = RunStreams::new(seeds, rep);
            let mut sampler = spec.build(objective.num_states(), &mut streams.algorithm)?;
            simulate(sampler.as_mut(), objective.as_mut(), &mut schedule, options, &mut streams)
        })
        .collect()
}

fn options_for(cfg: &ExperimentConfig, spec: &AlgorithmSpec, horizon: u64, checkpoints: Vec<u64>) -> RunOptions {
    let mut options = RunOptions::new(cfg.budget(horizon), spec.mode.metrics_step());
    options.checkpoints = checkpoints;
    options.burn_in = cfg.report.burn_in;
    options.keep_z = cfg.report.keep_z;
    options.tie_tolerance = cfg.problem.tie_tolerance;
    options
}

fn trace_rows(traces: &[RunTrace], every: Option<u64>) -> impl Iterator<Item = Vec<String>> + '_ {
    traces.iter().enumerate().flat_map(move |(rep, t)| {
        t.records
            .iter()
            .filter(move |r| every.is_none_or(|k| r.iteration % k == 0))
            .map(move |r| {
                vec![
                    r.iteration.to_string(),
                    rep.to_string(),
                    r.theta.to_string(),
                    r.sampled.to_string(),
                    r.estimate.to_string(),
                    format_g9(r.regret),
                    format_g9(r.efficiency),
                ]
            })
    })
}

fn trace_file_name(kind: AlgorithmKind, single: bool) -> String {
    if single {
        "trace.csv".into()
    } else {
        format!("trace_{}.csv", kind.slug())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSummary {
    pub algorithm: AlgorithmKind,
    pub checkpoint: u64,
    pub converged: usize,
    pub replications: usize,
    pub pct: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_regret: f64,
    pub mean_efficiency: f64,
}

fn summarize(kind: AlgorithmKind, traces: &[RunTrace]) -> Vec<CheckpointSummary> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let reps = traces.len();
    (0..first.records.len())
        .map(|k| {
            let converged = traces.iter().filter(|t| t.records[k].converged).count();
            let (ci_lo, ci_hi) = wilson_interval(converged, reps);
            CheckpointSummary {
                algorithm: kind,
                checkpoint: first.records[k].iteration,
                converged,
                replications: reps,
                pct: 100.0 * converged as f64 / reps as f64,
                ci_lo,
                ci_hi,
                mean_regret: traces.iter().map(|t| t.records[k].regret).sum::<f64>() / reps as f64,
                mean_efficiency: traces.iter().map(|t| t.records[k].efficiency).sum::<f64>() / reps as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub checkpoints: Vec<CheckpointSummary>,
    /// Per algorithm: mean and standard error over replications of the
    /// time-averaged efficiency loss after burn-in.
    pub efficiency_loss: Vec<(AlgorithmKind, f64, f64)>,
    pub files: Vec<PathBuf>,
}

/// Generic experiment: every configured algorithm, `R` replications.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let specs = cfg.algorithm_specs()?;
    let seeds = SeedScheme::new(cfg.report.seed);
    let mut report = RunReport {
        checkpoints: Vec::new(),
        efficiency_loss: Vec::new(),
        files: Vec::new(),
    };
    for spec in &specs {
        let options = options_for(cfg, spec, cfg.report.horizon, cfg.checkpoints());
        let traces = replicate(
            spec,
            || cfg.objective(),
            |_| cfg.schedule(spec.mode),
            &options,
            &seeds,
            cfg.report.replications,
        )?;
        let name = trace_file_name(spec.kind, specs.len() == 1);
        report.files.push(write_csv(out, &name, &TRACE_HEADER, trace_rows(&traces, None))?);
        let losses: Vec<f64> = traces.iter().map(|t| t.mean_efficiency_loss).collect();
        let (m, se) = mean_stderr(&losses);
        report.efficiency_loss.push((spec.kind, m, se));
        report.checkpoints.extend(summarize(spec.kind, &traces));
    }
    let rows = report.checkpoints.iter().map(|s| {
        vec![
            s.checkpoint.to_string(),
            s.algorithm.label().to_string(),
            format_g9(s.pct),
            format_g9(s.ci_lo),
            format_g9(s.ci_hi),
            format_g9(s.mean_regret),
            format_g9(s.mean_efficiency),
        ]
    });
    report.files.push(write_csv(
        out,
        "summary.csv",
        &["checkpoint", "algorithm", "pct", "ci_lo", "ci_hi", "mean_regret", "mean_efficiency"],
        rows,
    )?);
    Ok(report)
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10} {:>5} {:>8} {:>17} {:>12} {:>12}", "checkpoint", "alg", "conv %", "95% CI", "regret", "eff. loss")?;
        for s in &self.checkpoints {
            writeln!(
                f,
                "{:>10} {:>5} {:>8.1} {:>17} {:>12.5} {:>12.5}",
                s.checkpoint,
                s.algorithm.label(),
                s.pct,
                format!("[{:.1}, {:.1}]", s.ci_lo, s.ci_hi),
                s.mean_regret,
                s.mean_efficiency
            )?;
        }
        for (kind, m, se) in &self.efficiency_loss {
            writeln!(f, "{}: time-averaged efficiency loss {m:.5} ± {se:.5}", kind.label())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub lambda: f64,
    pub num_states: usize,
    pub checkpoint: u64,
    pub algorithm: AlgorithmKind,
    pub pct: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub files: Vec<PathBuf>,
}

impl Table1Report {
    pub fn pct(&self, lambda: f64, checkpoint: u64, algorithm: AlgorithmKind) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.lambda == lambda && r.checkpoint == checkpoint && r.algorithm == algorithm)
            .map(|r| r.pct)
    }
}

/// Convergence percentages of each algorithm per `(λ, S)` cell and
/// checkpoint; a run has converged when its estimate lies in `S*`.
pub fn table1(cfg: &ExperimentConfig, out: &Path) -> Result<Table1Report> {
    cfg.validate()?;
    let specs = cfg.algorithm_specs()?;
    if specs.iter().any(|s| s.mode != Mode::Static) {
        return Err(Error::config("algorithm.mode", "table1 runs the static variants"));
    }
    let cells: Vec<Cell> = if cfg.problem.cells.is_empty() {
        if cfg.problem.kind != ProblemKind::Poisson || cfg.problem.lambda.len() != 1 {
            return Err(Error::config("problem.cells", "table1 needs Poisson cells with one rate each"));
        }
        vec![Cell {
            lambda: cfg.problem.lambda[0],
            num_states: cfg.problem.num_states,
        }]
    } else {
        cfg.problem.cells.clone()
    };
    let checkpoints = cfg.checkpoints();
    let horizon = *checkpoints.last().expect("at least one checkpoint");
    let reps = cfg.report.replications;
    let mut rows = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let seeds = SeedScheme::new(cfg.report.seed).derive(ci as u64);
        for spec in &specs {
            let summaries = if cell.num_states == 1 {
                // one state: every estimate is the optimum
                checkpoints
                    .iter()
                    .map(|&c| (c, reps))
                    .collect::<Vec<_>>()
            } else {
                let options = options_for(cfg, spec, horizon, checkpoints.clone());
                let traces = replicate(
                    spec,
                    || Ok(Box::new(PoissonOrderSize::new(vec![cell.lambda], cell.num_states)?) as Box<dyn ObjectiveModel>),
                    |_| Ok(RegimeSchedule::Fixed(0)),
                    &options,
                    &seeds,
                    reps,
                )?;
                summarize(spec.kind, &traces)
                    .into_iter()
                    .map(|s| (s.checkpoint, s.converged))
                    .collect()
            };
            for (checkpoint, converged) in summaries {
                let (ci_lo, ci_hi) = wilson_interval(converged, reps);
                rows.push(Table1Row {
                    lambda: cell.lambda,
                    num_states: cell.num_states,
                    checkpoint,
                    algorithm: spec.kind,
                    pct: 100.0 * converged as f64 / reps as f64,
                    ci_lo,
                    ci_hi,
                });
            }
        }
    }
    let csv_rows = rows.iter().map(|r| {
        vec![
            format_g9(r.lambda),
            r.num_states.to_string(),
            r.checkpoint.to_string(),
            r.algorithm.label().to_string(),
            format_g9(r.pct),
            format_g9(r.ci_lo),
            format_g9(r.ci_hi),
        ]
    });
    let file = write_csv(out, "table1.csv", &TABLE1_HEADER, csv_rows)?;
    Ok(Table1Report { rows, files: vec![file] })
}

impl fmt::Display for Table1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut cells: Vec<(f64, usize)> = Vec::new();
        let mut algs: Vec<AlgorithmKind> = Vec::new();
        let mut checkpoints: Vec<u64> = Vec::new();
        for r in &self.rows {
            if !cells.contains(&(r.lambda, r.num_states)) {
                cells.push((r.lambda, r.num_states));
            }
            if !algs.contains(&r.algorithm) {
                algs.push(r.algorithm);
            }
            if !checkpoints.contains(&r.checkpoint) {
                checkpoints.push(r.checkpoint);
            }
        }
        for (lambda, s) in cells {
            writeln!(f, "lambda = {lambda}, S = {s}: % of runs with estimate in S*")?;
            write!(f, "{:>10}", "n")?;
            for a in &algs {
                write!(f, " {:>6}", a.label())?;
            }
            writeln!(f)?;
            for &c in &checkpoints {
                write!(f, "{c:>10}")?;
                for &a in &algs {
                    match self.rows.iter().find(|r| r.lambda == lambda && r.num_states == s && r.checkpoint == c && r.algorithm == a) {
                        Some(r) => write!(f, " {:>6.1}", r.pct)?,
                        None => write!(f, " {:>6}", "-")?,
                    }
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcedJumpSummary {
    pub algorithm: AlgorithmKind,
    /// % of runs whose estimate stayed in `S*` for every iteration in
    /// `[burn_in, switch_at)`.
    pub before_pct: f64,
    /// % of runs whose estimate entered the new `S*` within the window
    /// after the switch.
    pub after_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub epsilon: f64,
    pub algorithm: AlgorithmKind,
    pub mean_efficiency_loss: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct Example2Report {
    pub forced_jump: Vec<ForcedJumpSummary>,
    pub fig4: Vec<Fig4Row>,
    pub files: Vec<PathBuf>,
}

impl Example2Report {
    pub fn fig4_series(&self, algorithm: AlgorithmKind) -> Vec<(f64, f64)> {
        self.fig4
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .map(|r| (r.epsilon, r.mean_efficiency_loss))
            .collect()
    }
}

/// The regime-switching study: estimate and effort traces around a forced
/// jump (Figs 2 and 3) and mean efficiency loss against `ε` (Fig 4).
pub fn example2(cfg: &ExperimentConfig, out: &Path) -> Result<Example2Report> {
    cfg.validate()?;
    let specs = cfg.algorithm_specs()?;
    let objective = cfg.objective()?;
    if objective.num_regimes() < 2 {
        return Err(Error::config("problem.lambda", "example2 needs at least two regimes"));
    }
    if cfg.hypermodel.generator.is_empty() {
        return Err(Error::config("hypermodel.generator", "example2 needs a generator"));
    }
    let r = &cfg.report;
    let mut files = Vec::new();

    // forced jump, recorded at every iteration
    let horizon = r.switch_at + r.jump_window;
    let switches = if cfg.hypermodel.switches.is_empty() {
        vec![(r.switch_at, (cfg.hypermodel.regime + 1) % objective.num_regimes())]
    } else {
        cfg.hypermodel.switches.clone()
    };
    let trace_seeds = SeedScheme::new(r.seed);
    let every = r.trace_every.unwrap_or(10);
    let mut forced_jump = Vec::new();
    for spec in &specs {
        let mut options = options_for(cfg, spec, horizon, (1..=horizon).collect());
        options.budget = Budget::Iterations(horizon);
        let eps = cfg.hypermodel.epsilon.unwrap_or(match spec.mode {
            Mode::Adaptive { mu } => mu,
            Mode::Static => cfg.algorithm.mu,
        });
        let traces = replicate(
            spec,
            || cfg.objective(),
            |_| {
                Ok(if r.random_switching {
                    RegimeSchedule::Markov(cfg.hypermodel(eps)?)
                } else {
                    RegimeSchedule::Scripted {
                        initial: cfg.hypermodel.regime,
                        switches: switches.clone(),
                    }
                })
            },
            &options,
            &trace_seeds,
            r.replications,
        )?;
        let before = traces
            .iter()
            .filter(|t| {
                t.records
                    .iter()
                    .filter(|c| c.iteration >= r.burn_in && c.iteration < r.switch_at)
                    .all(|c| c.converged)
            })
            .count();
        let after = traces
            .iter()
            .filter(|t| t.records.iter().any(|c| c.iteration >= r.switch_at && c.converged))
            .count();
        let n = traces.len() as f64;
        forced_jump.push(ForcedJumpSummary {
            algorithm: spec.kind,
            before_pct: 100.0 * before as f64 / n,
            after_pct: 100.0 * after as f64 / n,
        });
        files.push(write_csv(
            out,
            &trace_file_name(spec.kind, false),
            &TRACE_HEADER,
            trace_rows(&traces, Some(every)),
        )?);
    }

    // efficiency against ε
    let sweep_horizon = if r.full_scale { FULL_SCALE_SWEEP } else { r.sweep_horizon };
    let mut fig4 = Vec::new();
    for (ei, &eps) in r.epsilons.iter().enumerate() {
        let seeds = SeedScheme::new(r.seed).derive(1000 + ei as u64);
        // validate once so the error names the field
        cfg.hypermodel(eps)?;
        for spec in &specs {
            let options = options_for(cfg, spec, sweep_horizon, Vec::new());
            let traces = replicate(
                spec,
                || cfg.objective(),
                |_| Ok(RegimeSchedule::Markov(cfg.hypermodel(eps)?)),
                &options,
                &seeds,
                r.replications,
            )?;
            let losses: Vec<f64> = traces.iter().map(|t| t.mean_efficiency_loss).collect();
            let (m, se) = mean_stderr(&losses);
            fig4.push(Fig4Row {
                epsilon: eps,
                algorithm: spec.kind,
                mean_efficiency_loss: m,
                stderr: se,
            });
        }
    }
    let rows = fig4.iter().map(|f| {
        vec![
            format_g9(f.epsilon),
            f.algorithm.label().to_string(),
            format_g9(f.mean_efficiency_loss),
            format_g9(f.stderr),
        ]
    });
    files.push(write_csv(out, "fig4.csv", &FIG4_HEADER, rows)?);
    Ok(Example2Report { forced_jump, fig4, files })
}

impl fmt::Display for Example2Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "forced jump: % of runs tracking S* before the switch / recovering after it")?;
        for s in &self.forced_jump {
            writeln!(f, "{:>5} {:>7.1} {:>7.1}", s.algorithm.label(), s.before_pct, s.after_pct)?;
        }
        writeln!(f, "mean efficiency loss by epsilon")?;
        for row in &self.fig4 {
            writeln!(
                f,
                "{:>9} {:>5} {:>10.5} ± {:.5}",
                format_g9(row.epsilon),
                row.algorithm.label(),
                row.mean_efficiency_loss,
                row.stderr
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OdeCheckReport {
    /// `(μ, sup gap)` in configured order.
    pub gaps: Vec<(f64, f64)>,
    pub decreasing: bool,
    pub within_tolerance: bool,
    pub tolerance: f64,
    pub files: Vec<PathBuf>,
}

impl OdeCheckReport {
    pub fn passed(&self) -> bool {
        self.decreasing && self.within_tolerance
    }
}

/// Sweeps `μ` and compares the ensemble regret of constant-step AS with the
/// switched ODE.
pub fn ode_check(cfg: &ExperimentConfig, out: &Path) -> Result<OdeCheckReport> {
    cfg.validate()?;
    if cfg.problem.kind != ProblemKind::Deterministic {
        return Err(Error::config("problem.kind", "ode-check needs the deterministic objective"));
    }
    let r = &cfg.report;
    if r.mus.is_empty() {
        return Err(Error::config("report.mus", "list at least one step size"));
    }
    let means = cfg.problem.means.clone();
    let seeds = SeedScheme::new(r.seed);
    let path = match cfg.hypermodel.kind {
        ScheduleKind::Markov if r.ode_horizon > 0.0 => {
            let mut rng = seeds.stream(0, StreamKind::Path);
            sample_ctmc_path(&cfg.generator()?, r.ode_horizon, cfg.hypermodel.regime, &mut rng)?
        }
        _ => CtmcPath::constant(cfg.hypermodel.regime, r.ode_horizon),
    };
    let mut gaps = Vec::new();
    let mut rows = Vec::new();
    for (i, &mu) in r.mus.iter().enumerate() {
        let rep = ode_tracking_check(&TrackingCheck {
            means: means.clone(),
            gamma: cfg.algorithm.gamma,
            mu,
            horizon: r.ode_horizon,
            replications: r.replications,
            path: path.clone(),
            seed: seeds.derive(i as u64).base_seed(),
        })?;
        let stride = (rep.times.len() / 500).max(1);
        for k in (0..rep.times.len()).step_by(stride) {
            rows.push(vec![
                format_g9(mu),
                format_g9(rep.times[k]),
                format_g9(rep.ensemble[k]),
                format_g9(rep.ode[k]),
            ]);
        }
        gaps.push((mu, rep.sup_gap));
    }
    let mut by_mu = gaps.clone();
    by_mu.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = by_mu.windows(2).all(|w| w[1].1 < w[0].1);
    let within_tolerance = by_mu.last().is_some_and(|g| g.1 <= r.gap_tolerance);
    let files = vec![
        write_csv(
            out,
            "ode_check.csv",
            &["mu", "sup_gap"],
            gaps.iter().map(|(m, g)| vec![format_g9(*m), format_g9(*g)]),
        )?,
        write_csv(out, "ode_trajectory.csv", &["mu", "t", "ensemble_regret", "ode_regret"], rows)?,
    ];
    Ok(OdeCheckReport {
        gaps,
        decreasing,
        within_tolerance,
        tolerance: r.gap_tolerance,
        files,
    })
}

impl fmt::Display for OdeCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (mu, gap) in &self.gaps {
            writeln!(f, "mu = {:<8} sup gap = {}", format_g9(*mu), format_g9(*gap))?;
        }
        let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
        writeln!(f, "{} gaps strictly decrease with mu", verdict(self.decreasing))?;
        writeln!(f, "{} smallest-mu gap <= {}", verdict(self.within_tolerance), self.tolerance)
    }
}
