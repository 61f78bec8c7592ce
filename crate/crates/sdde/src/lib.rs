//! IO, configuration and command-line front end for `sdde-core`.
//!
//! A scenario file ([`config::ScenarioConfig`]) names a drift, a Lévy measure,
//! delay measures, an initial segment and probe parameters. [`runner`] turns it
//! into [`sdde_core::probes::ProbeReport`]s and [`output`] writes them as JSON
//! and CSV.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod output;
pub mod runner;

pub use config::{load_config, ProbeName, ScenarioConfig};
pub use error::{ConfigError, RunError};
