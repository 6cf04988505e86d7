//! Batch front end for the `mmx_blx` library: synthesize or preprocess a
//! dataset, evolve detectors on it and evaluate the best one on held-out
//! subjects.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_evaluate, cmd_evolve, cmd_preprocess, cmd_synth, Overrides};
pub use config::RunConfig;
pub use error::{CliError, Result};
