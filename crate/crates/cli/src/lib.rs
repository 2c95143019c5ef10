//! Command-line front end for `cylwalk`: run configuration parsing and the
//! `measure`, `simulate`, `verify-newton1`, `verify-newton2` and `converge`
//! workflows.

pub mod commands;
pub mod config;

pub use commands::{Globals, Outcome};
pub use config::RunConfig;
