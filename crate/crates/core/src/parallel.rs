//! Thread-count and determinism switches read from the environment.
//!
//! `EMBFUSE_THREADS` caps the global rayon pool. `EMBFUSE_DETERMINISTIC=1`
//! runs batch gradients on the calling thread. Gradient reductions use a
//! fixed chunking either way, so both modes produce the same bits.

use std::sync::Once;

pub const THREADS_ENV: &str = "EMBFUSE_THREADS";
pub const DETERMINISTIC_ENV: &str = "EMBFUSE_DETERMINISTIC";

/// Configures the global pool from `EMBFUSE_THREADS`. Only the first call
/// has an effect.
pub fn init_from_env() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            // Fails only if a pool already exists, which is fine.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    });
}

/// Whether serialized execution was requested.
pub fn deterministic() -> bool {
    std::env::var(DETERMINISTIC_ENV).is_ok_and(|v| v.trim() == "1")
}
