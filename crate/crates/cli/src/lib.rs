//! Command-line pipeline: synthetic data generation, training, prediction,
//! scoring, and gradient self-checks.

mod cli;
pub mod commands;
pub mod config;

pub use cli::{exit_code, run, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK};
