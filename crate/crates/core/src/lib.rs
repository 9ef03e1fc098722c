//! Benchmark harness for diagnostic image classification.
//!
//! The crate drives pluggable classification backends (chat-completion
//! vision LLMs, a local model server, scripted mocks) over manifest-described
//! image datasets, refines prompts with confidence-filtered targeted
//! questions, and scores runs for accuracy, F1, calibration, execution time,
//! energy and CO₂.
//!
//! Module map:
//!
//! - [`dataset`]: manifests, stratified splits, image payloads
//! - [`backends`]: prompt construction, response parsing, adapters, batch dispatch
//! - [`filtering`]: high-confidence selection and targeted-question artifacts
//! - [`metrics`]: confusion matrices, precision/recall/F1, calibration
//! - [`resources`]: modeled energy and emissions
//! - [`orchestrator`]: run engine, results persistence, reports

pub mod backends;
pub mod dataset;
pub mod filtering;
pub mod labels;
pub mod metrics;
pub mod orchestrator;
pub mod resources;

pub use backends::{
    Backend, BackendConfig, BackendError, BackendKind, ClassificationOutcome, Prediction,
    PromptBundle,
};
pub use dataset::{DatasetManifest, ImagePayload, Modality, Sample, Split, SplitRatios};
pub use filtering::{FilterArtifact, FilterCriteria};
pub use labels::LabelSet;
pub use metrics::{CalibrationCurve, ConfusionMatrix, MetricsReport};
pub use orchestrator::{HarnessError, RunConfig};
pub use resources::PowerProfile;
