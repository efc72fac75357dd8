//! Dataset construction, evaluation runs, metrics and reports.

pub mod bundle;
pub mod dataset;
pub mod metrics;
pub mod report;
pub mod run;

use std::path::Path;

use thiserror::Error;

use crate::agents::AgentError;
use crate::generator::GeneratorError;
use crate::saboteur::{ErrorType, SaboteurError};

pub use bundle::{load_bundles, read_jsonl, write_jsonl, ProblemBundle, Split};
pub use dataset::{build_bundle, build_dataset, export_lp, AttemptStats, BuildStats, CountPlan, DatasetConfig, SplitCounts};
pub use metrics::{compute_metrics, wilson_interval, GroupMetrics, MetricsReport, Proportion};
pub use run::{run_eval, RunOptions, RunSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Pipeline(String),
    #[error("no verified {error} bundle after {attempts} source instances ({detail})")]
    Collapse {
        error: ErrorType,
        attempts: usize,
        detail: String,
    },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Saboteur(#[from] SaboteurError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub use rayon::ThreadPool;

/// A rayon pool with `n` worker threads (at least one).
pub fn thread_pool(n: usize) -> Result<ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))
}
