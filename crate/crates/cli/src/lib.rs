//! Command-line experiments: simulation, fitting, normalising-constant
//! benchmarks and replicated recovery studies, each recorded in a
//! manifest that replays it bit-exactly.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;

pub use commands::{execute, rerun, with_pool, RunSpec};
pub use error::{CliError, CliResult};
pub use manifest::Manifest;

/// Worker count from the `EGW_THREADS` environment variable.
pub fn env_threads() -> Option<usize> {
    std::env::var("EGW_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
}
