//! Configuration, command runners and artifact writers behind the `fracvi`
//! binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, Command, ConfigError, RunConfig};
pub use report::{Invariant, Report};
pub use run::run;
