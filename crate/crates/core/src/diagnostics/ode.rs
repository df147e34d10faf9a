//! Limit dynamics of the adaptive search.
//!
//! With `X = [f̂; r]`, `f̂ = f̃ − F(θ)` the belief deviation and `r` the
//! regret, the interpolated iterates follow the switched ODE
//!
//! ```text
//! df̂/dt = −f̂
//! dr/dt  = b^γ(f̂ + F(θ)) · F(θ) − F_min(θ) − r
//! ```
//!
//! where `θ(t)` is the continuous-time regime chain. Between jumps this is
//! integrated with classical RK4; steps are cut at jump times.
//!
//! What happens at a jump is a [`JumpRule`]. The limit ODE keeps `X`
//! continuous and only switches the vector field. The iterates themselves
//! keep the beliefs `f̃` and the realized average `f̄ = r + F_min`
//! continuous, so in their coordinates `f̂` and `r` shift by the change in
//! `F` and `F_min`.
//!
//! With `f̂ = 0` and a fixed regime the regret equation is linear with
//! solution `r(t) = r* + (r(0) − r*) e^{−t}`, `r* = b^γ(F)·F − F_min`.

use crate::error::{Error, Result};
use crate::hypermodel::CtmcPath;
use crate::strategy::logit;

/// Largest step accepted without complaint by the tracking check.
pub const MAX_ODE_STEP: f64 = 0.01;

/// State update at a regime jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpRule {
    /// `X` is continuous; only the vector field switches.
    #[default]
    Continuous,
    /// `f̃ = f̂ + F` and `f̄ = r + F_min` are continuous, as for the iterates.
    MatchIterates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedOdeState {
    pub f_hat: Vec<f64>,
    pub regret: f64,
}

impl SwitchedOdeState {
    /// State matching an algorithm started at `f̃ = 0`, `f̄ = 0` in a regime
    /// with means `means`.
    pub fn from_zero_start(means: &[f64]) -> Self {
        let f_min = min(means);
        SwitchedOdeState {
            f_hat: means.iter().map(|m| -m).collect(),
            regret: -f_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub regret: Vec<f64>,
    /// `‖f̂‖_∞` at each recorded time.
    pub f_hat_norm: Vec<f64>,
    pub regimes: Vec<usize>,
    pub final_state: SwitchedOdeState,
}

impl OdeTrajectory {
    /// Right-continuous, piecewise-linear regret lookup.
    pub fn regret_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.regret[0];
        }
        let i = k - 1;
        if i + 1 >= self.times.len() {
            return self.regret[i];
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        if t1 <= t0 {
            return self.regret[i + 1];
        }
        let w = (t - t0) / (t1 - t0);
        self.regret[i] + w * (self.regret[i + 1] - self.regret[i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `r* = b^γ(F)·F − F_min`, the fixed-regime equilibrium regret.
pub fn equilibrium_regret(means: &[f64], gamma: f64) -> Result<f64> {
    let b = logit(means, gamma)?;
    let dot: f64 = b.probs().iter().zip(means).map(|(p, f)| p * f).sum();
    Ok(dot - min(means))
}

pub fn closed_form_regret(r0: f64, r_star: f64, elapsed: f64) -> f64 {
    r_star + (r0 - r_star) * (-elapsed).exp()
}

struct Field<'a> {
    means: &'a [f64],
    f_min: f64,
    gamma: f64,
    scratch: Vec<f64>,
}

impl Field<'_> {
    /// Writes `dX/dt` for `X = [f̂; r]` into `out`.
    fn eval(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.means.len();
        self.scratch.clear();
        self.scratch.extend(x[..s].iter().zip(self.means).map(|(h, f)| h + f));
        let b = logit(&self.scratch, self.gamma)?;
        let dot: f64 = b.probs().iter().zip(self.means).map(|(p, f)| p * f).sum();
        for i in 0..s {
            out[i] = -x[i];
        }
        out[s] = dot - self.f_min - x[s];
        Ok(())
    }
}

fn rk4_step(field: &mut Field<'_>, x: &mut [f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut Vec<f64>) -> Result<()> {
    let n = x.len();
    field.eval(x, &mut k[0])?;
    tmp.clear();
    tmp.extend((0..n).map(|i| x[i] + 0.5 * h * k[0][i]));
    field.eval(tmp, &mut k[1])?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k[1][i];
    }
    field.eval(tmp, &mut k[2])?;
    for i in 0..n {
        tmp[i] = x[i] + h * k[2][i];
    }
    field.eval(tmp, &mut k[3])?;
    for i in 0..n {
        x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
    Ok(())
}

/// Integrates the switched ODE along `path` over `[0, horizon]` with step
/// `dt` (shortened to land on jump times and the horizon).
///
/// `means[θ][s]` are the true means per regime. Every step is recorded; a
/// jump records the pre- and post-jump state at the same time. The state is
/// continuous across jumps.
pub fn integrate_switched_ode(
    initial: &SwitchedOdeState,
    means: &[Vec<f64>],
    gamma: f64,
    path: &CtmcPath,
    horizon: f64,
    dt: f64,
) -> Result<OdeTrajectory> {
    integrate_switched_ode_with(initial, means, gamma, path, horizon, dt, JumpRule::Continuous)
}

/// [`integrate_switched_ode`] with an explicit jump rule.
pub fn integrate_switched_ode_with(
    initial: &SwitchedOdeState,
    means: &[Vec<f64>],
    gamma: f64,
    path: &CtmcPath,
    horizon: f64,
    dt: f64,
    jump: JumpRule,
) -> Result<OdeTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::config("horizon", format!("must be non-negative, got {horizon}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::config("gamma", format!("must be positive, got {gamma}")));
    }
    let s = initial.f_hat.len();
    if means.iter().any(|m| m.len() != s) {
        return Err(Error::InvalidInput("means and initial state disagree on the number of states".into()));
    }
    let f_mins: Vec<f64> = means.iter().map(|m| min(m)).collect();

    let mut x: Vec<f64> = initial.f_hat.iter().copied().chain([initial.regret]).collect();
    let mut regime = path.regime_at(0.0);
    if regime >= means.len() {
        return Err(Error::InvalidInput(format!("path visits regime {regime} without means")));
    }
    let mut traj = OdeTrajectory {
        times: Vec::new(),
        regret: Vec::new(),
        f_hat_norm: Vec::new(),
        regimes: Vec::new(),
        final_state: initial.clone(),
    };
    let record = |traj: &mut OdeTrajectory, t: f64, x: &[f64], regime: usize| {
        traj.times.push(t);
        traj.regret.push(x[s]);
        traj.f_hat_norm.push(x[..s].iter().fold(0.0, |a, v| a.max(v.abs())));
        traj.regimes.push(regime);
    };
    record(&mut traj, 0.0, &x, regime);

    let jumps: Vec<f64> = path.jump_times().iter().copied().filter(|&j| j < horizon).collect();
    let mut next_jump = 0;
    let mut k = [vec![0.0; s + 1], vec![0.0; s + 1], vec![0.0; s + 1], vec![0.0; s + 1]];
    let mut tmp = Vec::with_capacity(s + 1);
    let mut t = 0.0;
    let mut steps_in_segment = 0u64;
    let mut segment_start = 0.0;
    while t < horizon {
        let stop = jumps.get(next_jump).copied().unwrap_or(horizon);
        // step from the segment origin to avoid drift in accumulated time
        let target = (segment_start + (steps_in_segment + 1) as f64 * dt).min(stop);
        let h = target - t;
        if h > 0.0 {
            let mut field = Field {
                means: &means[regime],
                f_min: f_mins[regime],
                gamma,
                scratch: Vec::with_capacity(s),
            };
            rk4_step(&mut field, &mut x, h, &mut k, &mut tmp)?;
            t = target;
            steps_in_segment += 1;
            record(&mut traj, t, &x, regime);
        }
        if next_jump < jumps.len() && t >= jumps[next_jump] {
            let new_regime = path.regime_at(t);
            if new_regime >= means.len() {
                return Err(Error::InvalidInput(format!("path visits regime {new_regime} without means")));
            }
            if jump == JumpRule::MatchIterates {
                for i in 0..s {
                    x[i] += means[regime][i] - means[new_regime][i];
                }
                x[s] += f_mins[regime] - f_mins[new_regime];
            }
            regime = new_regime;
            next_jump += 1;
            segment_start = t;
            steps_in_segment = 0;
            record(&mut traj, t, &x, regime);
        }
    }
    traj.final_state = SwitchedOdeState {
        f_hat: x[..s].to_vec(),
        regret: x[s],
    };
    Ok(traj)
}
