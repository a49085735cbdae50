//! Scenario files, output writers and subcommands behind the `ftsmc` binary.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{analyze, bounds, compare, feasibility, run, simulate, Analysis, ExitStatus, Options};
pub use scenario::{Model, Scenario, ScenarioError, ScenarioFile};

/// Environment variable overriding `sim.record_stride`.
pub const RECORD_STRIDE_ENV: &str = "FTSMC_RECORD_STRIDE";

/// Reads the stride override; `Err` carries a message for an unusable value.
pub fn record_stride_from_env() -> Result<Option<usize>, String> {
    match std::env::var(RECORD_STRIDE_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{RECORD_STRIDE_ENV} must be a positive integer, got {v:?}")),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{RECORD_STRIDE_ENV}: {e}")),
    }
}
