//! Path simulators for the impacted market.
//!
//! * [`simulate_discrete`]: the position is rebalanced at `n` dates and each
//!   trade of `delta` shares moves the price by `delta f(X-)`.
//! * [`simulate_continuous`]: the `n -> infinity` limit, with
//!   `dX = (mu + b f + a sigma f') dt + (sigma + a f) dW`,
//!   `dY = b dt + a dW` and `dV = Y dX + a^2 f / 2 dt`.
//! * [`simulate_resilience`]: the continuous limit with an impact state `R`
//!   that decays at rate `rho`.
//!
//! All simulators consume caller-provided Brownian increments so that paths
//! can be coupled, and [`path_rng`] derives per-path streams from a master
//! seed.

mod controls;
mod paths;
mod rate;

pub use controls::{ControlLaw, Controls, ItoControls, StateFn};
pub use paths::{
    brownian_increments, euler_step, path_rng, simulate_continuous, simulate_discrete,
    simulate_resilience, SimPath, StepState,
};
pub use rate::{convergence_study, ConvergenceStudy, RateRow, StudySetup, MIN_PATHS};
