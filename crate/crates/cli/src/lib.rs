//! Command implementations behind the `slcarma` binary.
//!
//! Each command reads an [`ExperimentConfig`], runs the library pipeline and
//! writes CSV/JSON artifacts into the configured output directory. Failures
//! carry a category that maps onto the process exit code.

pub mod commands;
pub mod config;
pub mod failure;

pub use config::{ExperimentConfig, Overrides};
pub use failure::{exit, Failure, Result};

/// Applies `SLCARMA_THREADS` (a positive integer) to the global rayon pool.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SLCARMA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::validation("SLCARMA_THREADS", format!("must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))
}
