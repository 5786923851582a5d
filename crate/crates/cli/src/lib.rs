//! Batch front-end for `dispersive-lab`: parses a run config, executes one
//! experiment and writes CSV artifacts plus `manifest.json`.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{Experiment, RunConfig};
pub use error::{CliError, Result};
pub use manifest::RunManifest;
pub use run::run_experiment;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "DISPERSIVE_LAB_THREADS";

/// Sizes the global rayon pool from `DISPERSIVE_LAB_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::InvalidValue {
        key: THREADS_ENV.into(),
        message: format!("`{raw}` is not a positive integer"),
    })?;
    // a pool that is already built keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
