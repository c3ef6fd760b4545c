//! Library side of the `usageval` binary: config loading and the commands.

pub mod commands;
pub mod config;
pub mod failure;

pub use config::{load_case, Case, RunConfig, StructureSelection};
pub use failure::Failure;
