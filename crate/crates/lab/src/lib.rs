//! Experiment harness for ergokit: TOML configs, seeded substreams, the
//! genericity experiment, the inequality suite and artifact emission.

pub mod artifact;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod rng;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ergokit::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// Raised under `--strict` when an estimate did not converge.
    #[error("not converged: {0}")]
    NotConverged(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) | LabError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Size the global worker pool from ERGOKIT_THREADS, if set. Safe to call
/// more than once.
pub fn init_threads() {
    if let Some(n) = std::env::var("ERGOKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
