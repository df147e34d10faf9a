//! Tracking and efficiency diagnostics plus the switched-ODE oracle.

mod metrics;
mod ode;
mod tracking;

pub use metrics::{efficiency, in_upsilon, metrics_update, optimality_gap, MetricsState};
pub use ode::{
    closed_form_regret, equilibrium_regret, integrate_switched_ode, OdeTrajectory, SwitchedOdeState,
    MAX_ODE_STEP,
};
pub use tracking::{ode_tracking_check, TrackingCheck, TrackingReport};
