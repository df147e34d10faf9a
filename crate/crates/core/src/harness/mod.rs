//! Configuration, replication management and CSV reporting for the
//! experiments exposed by the command-line tool.

pub mod config;
mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use experiments::{
    example2, ode_check, replicate, run_experiment, table1, CheckpointSummary, Example2Report, Fig4Row,
    ForcedJumpSummary, OdeCheckReport, RunReport, Table1Report, Table1Row, FULL_SCALE_SWEEP,
};

use crate::error::{Error, Result};

/// Runs `f` on a worker pool with `threads` threads (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("report.threads", e.to_string()))?;
    Ok(pool.install(f))
}
