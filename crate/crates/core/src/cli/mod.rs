//! Configuration files, initial states, output formats and the drivers behind
//! the `rcsg` binary.

pub mod config;
pub mod initial;
pub mod io;
pub mod runner;

pub use config::{parse_config, ConfigError, InitialKind, RunConfig, StopMode};
pub use runner::{certify_state, compare, parse_methods, reference, run, ComparisonRow, RunReport};
