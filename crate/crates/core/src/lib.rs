//! Super-replication pricing of covered European options when every trade
//! moves the price permanently and the hedge's gamma is capped.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: coefficient functions, the impacted market, gamma caps,
//!   payoffs, face-lifting and the growth bounds that clamp the scheme.
//! * [`pde`]: the backward monotone finite-difference solver and a
//!   quadrature benchmark for the impact-free heat equation.
//! * [`dynamics`]: path simulators for discrete rebalancing, the continuous
//!   limit and the resilience extension.
//! * [`hedging`]: hedging controls read off a price surface and a Monte
//!   Carlo check that they super-replicate.
//!
//! Data-parallel loops (per-node row solves, per-path simulation) go through
//! [`exec::Execution`]; with the `parallel` feature disabled everything runs
//! sequentially and produces bit-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod hedging;
pub mod model;
pub mod pde;

pub use error::{Error, Result};
pub use exec::Execution;
