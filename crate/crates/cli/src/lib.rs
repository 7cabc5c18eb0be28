//! Experiment runner behind the `itx` binary.
//!
//! An [`ExperimentSpec`] fully describes a run; [`run`] executes it and writes
//! every artifact under `spec.out`. Metrics files contain no timestamps, so two
//! runs of the same spec produce byte-identical CSVs; wall-clock times go to
//! the sidecar `run.log` only.

mod commands;
mod error;
mod spec;

pub use commands::{run, Metric, RunSummary};
pub use error::{CliError, ExitCode};
pub use spec::{ExperimentSpec, Mode};

/// Worker pool capped by `ITX_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("ITX_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config("ITX_THREADS", format!("expected a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::config("ITX_THREADS", e.to_string()))
}
