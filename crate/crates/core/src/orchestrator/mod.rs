//! Run engine: wires datasets, backends, filtering, metrics and resource
//! accounting into reproducible runs with on-disk results and reports.
//!
//! A run writes `<output_dir>/<run_id>/results.csv` (one row per sample of
//! the selected split) and `<output_dir>/<run_id>/summary.json` (config
//! snapshot, metrics, calibration, resources). The summary's `config` field is
//! a complete [`RunConfig`] and can be fed straight back into
//! [`run_benchmark`].

mod build;
mod config;
mod report;
mod results;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::backends::BackendError;
use crate::dataset::DatasetError;
use crate::filtering::{FilterError, StageCounts};
use crate::metrics::MetricsError;
use crate::resources::ResourceError;

pub use build::{build_filter, build_filter_for_run, BuildFilterOutput};
pub use config::RunConfig;
pub use report::{
    compare_runs, load_run, render_report, Change, Comparison, Report, ReportFormat, RunRow,
    Verdict,
};
pub use results::{read_results, write_results, ResultRow, RESULTS_HEADER};
pub use run::{run_benchmark, ArtifactRef, RunOutput, RunSummary, SampleError};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Resources(#[from] ResourceError),
    #[error("run directory {0} already exists")]
    RunExists(PathBuf),
    #[error("no train-split results: {0}")]
    NoTrainResults(String),
    #[error("no samples survive the {stage} stage (total {}, label-matched {}, above-threshold {}, sampled {})",
        .counts.total, .counts.label_matched, .counts.above_threshold, .counts.sampled)]
    ZeroSurvivors {
        stage: &'static str,
        counts: StageCounts,
    },
    #[error("{path}: {reason}")]
    Schema { path: PathBuf, reason: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    /// Configuration problems (reported before any request) versus failures
    /// during execution.
    pub fn is_config_error(&self) -> bool {
        match self {
            HarnessError::Config(_)
            | HarnessError::Dataset(_)
            | HarnessError::Backend(_)
            | HarnessError::Resources(_)
            | HarnessError::RunExists(_)
            | HarnessError::NoTrainResults(_) => true,
            HarnessError::Filter(f) => matches!(
                f,
                FilterError::InvalidCriteria(_)
                    | FilterError::LabelMismatch(_)
                    | FilterError::DuplicateTarget(_)
                    | FilterError::UnusableArtifact(_)
                    | FilterError::Format { .. }
                    | FilterError::Io { .. }
                    | FilterError::Backend(_)
                    | FilterError::NotTextCapable(_)
            ),
            HarnessError::Metrics(_)
            | HarnessError::ZeroSurvivors { .. }
            | HarnessError::Schema { .. }
            | HarnessError::Io { .. } => false,
        }
    }

    /// Process exit code: 1 for configuration errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_config_error() {
            1
        } else {
            2
        }
    }
}
