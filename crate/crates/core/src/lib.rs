//! Adaptive search for regime-switching discrete stochastic optimization.
//!
//! The crate is organised around the pieces of a simulation study:
//!
//! - [`strategy`]: smooth best-response (logit) sampling and the
//!   importance-weighted belief recursion that drives the adaptive search.
//! - [`hypermodel`]: the hidden slow Markov chain that switches the problem
//!   between regimes, in discrete-step and continuous-time form.
//! - [`problems`]: stochastic objectives with known per-regime means.
//! - [`algorithms`]: the adaptive search (AS) sampler and the random search
//!   (RS) and UCB baselines behind a single [`algorithms::Sampler`] contract.
//! - [`diagnostics`]: regret / empirical-distribution tracking and the
//!   switched-ODE oracle for the limit dynamics.
//! - [`harness`]: configuration, seeded replications, CSV reporting and the
//!   canned experiments (`table1`, `example2`, `ode-check`).
//!
//! All objectives are minimised and all observations are expected to lie in
//! `[-1, 1]`.

pub mod algorithms;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod hypermodel;
pub mod problems;
pub mod rng;
pub mod simulation;
pub mod strategy;

pub use error::{Error, Result};
pub use rng::{RandomSource, SeedScheme, StreamKind};
