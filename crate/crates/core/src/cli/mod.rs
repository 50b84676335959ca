//! Config-driven runner, sweeps, verification suites and the file formats.

pub mod checkpoint;
mod commands;
mod config;
mod metrics;
pub mod verify;

pub use commands::{cmd_quantize, cmd_run, cmd_sweep, cmd_verify, RunOutcome, SweepRow};
pub use config::ExperimentConfig;
pub use metrics::{MetricsWriter, METRICS_COLUMNS};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } | Error::NonFiniteGradient(_) | Error::ScheduleOverflow(_) => EXIT_DIVERGED,
        _ => EXIT_USAGE,
    }
}
