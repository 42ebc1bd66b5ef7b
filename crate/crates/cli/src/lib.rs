//! Configuration-driven front end for `gridcarve-core`: reads a TOML run
//! description, solves it and writes CSV/VTK files.

pub mod config;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, Mode, RunConfig};
pub use run::{run, RunError, RunOptions, RunOutput};

/// Sizes the global thread pool from `GRIDCARVE_THREADS` (0 or unset means
/// one thread per core).
pub fn init_threads(var: Option<&str>) -> Result<(), ConfigError> {
    let n = match var {
        None => 0,
        Some(s) => s.trim().parse::<usize>().map_err(|_| {
            ConfigError::Invalid(vec![format!(
                "GRIDCARVE_THREADS must be a non-negative integer, got `{s}`"
            )])
        })?,
    };
    // A pool that already exists (e.g. in tests) is fine to keep.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
