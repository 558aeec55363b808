//! Command-line front end: configuration, run-directory layout and the
//! experiment verbs.

pub mod commands;
pub mod config;
pub mod layout;

pub use commands::*;
pub use config::{AttackerSelection, ExperimentConfig, PartitionConfig};
pub use layout::Layout;
