//! Numeric check of the weak-convergence claim: the ensemble-averaged
//! regret of constant-step adaptive search, read on the interpolated clock
//! `t = nμ`, against the switched ODE along the same regime path. The ODE
//! is integrated in the iterates' coordinates ([`JumpRule::MatchIterates`]),
//! which coincides with the limit ODE on a fixed regime.

use rayon::prelude::*;

use crate::algorithms::{iterate, AdaptiveSearch};
use crate::diagnostics::metrics::MetricsState;
use crate::diagnostics::ode::{integrate_switched_ode_with, JumpRule, SwitchedOdeState, MAX_ODE_STEP};
use crate::error::{Error, Result};
use crate::hypermodel::CtmcPath;
use crate::problems::{optima_of, DEFAULT_TIE_TOLERANCE};
use crate::rng::{SeedScheme, StreamKind};
use crate::strategy::StepRule;

#[derive(Debug, Clone)]
pub struct TrackingCheck {
    /// `means[θ][s]`, observed without noise.
    pub means: Vec<Vec<f64>>,
    pub gamma: f64,
    pub mu: f64,
    pub horizon: f64,
    pub replications: usize,
    /// Continuous-time regime path; iteration `n` runs in regime `path(nμ)`.
    pub path: CtmcPath,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrackingReport {
    pub mu: f64,
    pub sup_gap: f64,
    pub times: Vec<f64>,
    pub ensemble: Vec<f64>,
    pub ode: Vec<f64>,
}

fn validate(check: &TrackingCheck) -> Result<()> {
    if !(check.mu > 0.0 && check.mu <= 1.0) {
        return Err(Error::config("algorithm.mu", format!("must lie in (0, 1], got {}", check.mu)));
    }
    if !(check.gamma > 0.0) {
        return Err(Error::config("algorithm.gamma", format!("must be positive, got {}", check.gamma)));
    }
    if !(check.horizon >= 0.0 && check.horizon.is_finite()) {
        return Err(Error::config("report.horizon", format!("must be non-negative, got {}", check.horizon)));
    }
    if check.replications == 0 {
        return Err(Error::config("report.replications", "must be at least 1"));
    }
    if check.means.is_empty() {
        return Err(Error::config("problem.means", "need at least one regime"));
    }
    Ok(())
}

/// Runs `replications` independent constant-step runs and returns the
/// sup-norm gap between their mean regret and the ODE on `[0, horizon]`.
pub fn ode_tracking_check(check: &TrackingCheck) -> Result<TrackingReport> {
    validate(check)?;
    let mu = check.mu;
    let steps = (check.horizon / mu).round() as usize;
    let num_states = check.means[0].len();
    let f_mins: Vec<f64> = check.means.iter().map(|m| optima_of(m, DEFAULT_TIE_TOLERANCE).f_min).collect();
    let regimes: Vec<usize> = (0..=steps).map(|n| check.path.regime_at(n as f64 * mu)).collect();
    if let Some(&bad) = regimes.iter().find(|&&r| r >= check.means.len()) {
        return Err(Error::InvalidInput(format!("path visits regime {bad} without means")));
    }
    let seeds = SeedScheme::new(check.seed);

    let runs: Vec<Vec<f64>> = (0..check.replications)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let mut rng = seeds.stream(rep as u64, StreamKind::Algorithm);
            let mut sampler = AdaptiveSearch::constant(num_states, mu, check.gamma)?;
            let mut metrics = MetricsState::new(num_states, StepRule::Constant(mu)).with_initial_regret(f_mins[regimes[0]]);
            let mut r = Vec::with_capacity(steps + 1);
            r.push(metrics.regret());
            for n in 1..=steps {
                // iteration n is observed at time nμ
                let theta = regimes[n];
                let means = &check.means[theta];
                let rec = iterate(&mut sampler, &mut rng, |s| means[s])?;
                metrics.update(rec.sampled, rec.observation, f_mins[theta]);
                r.push(metrics.regret());
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;

    let mut ensemble = vec![0.0; steps + 1];
    for run in &runs {
        for (e, v) in ensemble.iter_mut().zip(run) {
            *e += v;
        }
    }
    for e in &mut ensemble {
        *e /= check.replications as f64;
    }

    let times: Vec<f64> = (0..=steps).map(|n| n as f64 * mu).collect();
    let ode_dt = mu / (mu / MAX_ODE_STEP).ceil();
    let initial = SwitchedOdeState::from_zero_start(&check.means[regimes[0]]);
    let ode = if steps == 0 {
        vec![initial.regret]
    } else {
        let traj = integrate_switched_ode_with(
            &initial,
            &check.means,
            check.gamma,
            &check.path,
            times[steps],
            ode_dt,
            JumpRule::MatchIterates,
        )?;
        times.iter().map(|&t| traj.regret_at(t)).collect()
    };
    let sup_gap = ensemble.iter().zip(&ode).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(TrackingReport {
        mu,
        sup_gap,
        times,
        ensemble,
        ode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(mu: f64, horizon: f64) -> TrackingCheck {
        TrackingCheck {
            means: vec![vec![-0.8, -0.2, -0.5]],
            gamma: 0.1,
            mu,
            horizon,
            replications: 50,
            path: CtmcPath::constant(0, horizon),
            seed: 11,
        }
    }

    #[test]
    fn zero_horizon_has_zero_gap() {
        let rep = ode_tracking_check(&check(0.01, 0.0)).unwrap();
        assert!(rep.sup_gap < 1e-12);
        assert_eq!(rep.ensemble.len(), 1);
    }

    #[test]
    fn small_step_tracks_ode() {
        let rep = ode_tracking_check(&check(0.005, 3.0)).unwrap();
        assert!(rep.sup_gap < 0.1, "gap {}", rep.sup_gap);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(ode_tracking_check(&check(0.0, 1.0)).is_err());
    }
}
