//! Experiment harness behind the `sparsemap` command-line tool: instance
//! files, batch solving, solver comparisons, Jacobian checks and a synthetic
//! training loop.

pub mod compare;
pub mod gradcheck;
pub mod instance;
pub mod sampling;
pub mod solve;
pub mod train;

/// Environment variable capping batch concurrency.
pub const THREADS_ENV: &str = "SPARSEMAP_THREADS";

/// Configures the global worker pool from [`THREADS_ENV`] (all cores when
/// unset). Only the first call has an effect.
pub fn init_thread_pool() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    if threads == 0 {
        return Err(format!("{THREADS_ENV} must be a positive integer, got `{value}`"));
    }
    // an already-initialized pool is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
