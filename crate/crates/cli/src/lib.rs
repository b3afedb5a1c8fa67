//! Batch front end for the `impact-hedge` library: TOML experiment configs in,
//! CSV artifacts and a manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{ExperimentConfig, Mode};
pub use run::{run, RunInfo};
