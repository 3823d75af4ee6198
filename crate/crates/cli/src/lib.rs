//! Configuration, orchestration and artifact handling for `wnc-scatter`.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;

pub use commands::{config_hash, format_report, run, Command, Report, Summary};
pub use config::ExperimentConfig;
pub use manifest::Manifest;

/// Sizes the global thread pool from `WNC_THREADS` (all cores when unset).
pub fn init_threads() -> anyhow::Result<()> {
    let n = match std::env::var("WNC_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| anyhow::anyhow!("WNC_THREADS must be a positive integer, got '{s}'"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}
