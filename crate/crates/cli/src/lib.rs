//! Command-line front end: file formats, model persistence and experiment
//! harnesses on top of `pbmin-core`.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use error::{CliError, Result};

/// Sizes the global rayon pool from `PBMIN_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PBMIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("PBMIN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Usage(e.to_string()))
}
