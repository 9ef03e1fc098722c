use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::results::{write_results, ResultRow};
use super::{HarnessError, RunConfig, RESULTS_FILE, SUMMARY_FILE};
use crate::backends::{build_prompt, Backend, BackendKind, ClassificationOutcome};
use crate::dataset::{assign_splits, load_manifest, DatasetManifest, Modality};
use crate::filtering::FilterArtifact;
use crate::metrics::{
    compute_calibration, compute_confusion, compute_metrics, CalibrationCurve, MetricsError,
    MetricsReport,
};
use crate::resources::{aggregate_resources, energy_wh, ResourceSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub path: PathBuf,
    pub target_label: String,
    pub n_questions: usize,
    pub source_run_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub sample_id: String,
    pub message: String,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub started_at: String,
    pub finished_at: String,
    /// Absolute-path snapshot; enough to re-issue the run.
    pub config: RunConfig,
    pub dataset_id: String,
    pub modality: Modality,
    pub label_set: Vec<String>,
    /// `manifest` or `assigned(seed=N)`.
    pub split_source: String,
    pub n_samples: usize,
    pub filter_applied: bool,
    pub filter_artifacts: Vec<ArtifactRef>,
    pub metrics: MetricsReport,
    pub calibration: Option<CalibrationCurve>,
    pub resources: ResourceSummary,
    pub errors: Vec<SampleError>,
    pub footnotes: Vec<String>,
}

impl RunSummary {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Schema {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(HarnessError::io(path))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_dir: PathBuf,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
    pub outcomes: Vec<ClassificationOutcome>,
    pub metrics: MetricsReport,
    pub calibration: Option<CalibrationCurve>,
    pub resources: ResourceSummary,
    pub summary: RunSummary,
}

fn prepare_manifest(config: &RunConfig) -> Result<(DatasetManifest, String), HarnessError> {
    let manifest = load_manifest(&config.manifest_path)?;
    if manifest.all_assigned() {
        return Ok((manifest, "manifest".into()));
    }
    if manifest.samples.iter().any(|s| s.split.is_some()) {
        tracing::warn!("manifest assigns splits to only some samples; reassigning all");
    }
    let assigned = assign_splits(&manifest, config.split_ratios, config.seed)?;
    Ok((assigned, format!("assigned(seed={})", config.seed)))
}

fn to_row(
    outcome: &ClassificationOutcome,
    ground_truth: &str,
    config: &RunConfig,
    timestamp: &str,
) -> Result<ResultRow, HarnessError> {
    let full_response = match (&outcome.error, outcome.full_response.is_empty()) {
        (Some(err), true) => format!("error: {err}"),
        _ => outcome.full_response.clone(),
    };
    Ok(ResultRow {
        sample_id: outcome.sample_id.clone(),
        ground_truth: ground_truth.to_string(),
        predicted_label: outcome.predicted_label.to_string(),
        confidence_score: outcome.confidence,
        execution_time_s: outcome.exec_time_s,
        energy_wh: energy_wh(outcome.exec_time_s, &config.power_profile)?,
        full_response,
        backend_id: config.backend.backend_id.clone(),
        run_id: config.run_id.clone(),
        timestamp: timestamp.to_string(),
    })
}

/// Classify every sample of the configured split and persist rows, metrics
/// and the run summary.
pub async fn run_benchmark(config: &RunConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let run_dir = config.run_dir();
    if run_dir.exists() {
        return Err(HarnessError::RunExists(run_dir));
    }

    let (manifest, split_source) = prepare_manifest(config)?;
    let samples = manifest.samples_in(config.split);
    if samples.is_empty() {
        return Err(HarnessError::Config(format!(
            "split `{}` of dataset `{}` has no samples",
            config.split, manifest.dataset_id
        )));
    }

    let mut artifacts = Vec::with_capacity(config.filter_artifact_paths.len());
    for path in &config.filter_artifact_paths {
        artifacts.push(FilterArtifact::load(path)?);
    }
    let bundle = build_prompt(&manifest.label_set, manifest.modality, &artifacts)?;

    let mut backend_config = config.backend.clone();
    if backend_config.kind == BackendKind::LocalServer && backend_config.dataset_id.is_none() {
        backend_config.dataset_id = Some(manifest.dataset_id.clone());
    }
    let backend = Backend::from_config(&backend_config)?;

    std::fs::create_dir_all(&config.output_dir).map_err(HarnessError::io(&config.output_dir))?;
    let mut snapshot = config.absolutized()?;
    snapshot.backend = backend_config;

    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    tracing::info!(run_id = %config.run_id, n = samples.len(), split = %config.split, "starting run");
    let outcomes = backend.run_batch(&bundle, &samples, &manifest).await?;

    let ground_truths = manifest.ground_truths();
    let rows = outcomes
        .iter()
        .map(|o| to_row(o, &ground_truths[&o.sample_id], config, &started_at))
        .collect::<Result<Vec<_>, _>>()?;

    let cm = compute_confusion(&outcomes, &ground_truths, &manifest.label_set)?;
    let metrics = compute_metrics(&cm, &outcomes)?;
    let calibration = match compute_calibration(&outcomes, &ground_truths, config.n_bins) {
        Ok(c) => Some(c),
        Err(MetricsError::NoConfidences) => None,
        Err(e) => return Err(e.into()),
    };
    let resources = aggregate_resources(&outcomes, &config.power_profile)?;

    let mut footnotes = Vec::new();
    if !metrics.zero_division.is_empty() {
        footnotes.push(format!(
            "precision/recall set to 0 for labels with an empty denominator: {}",
            metrics.zero_division.join(", ")
        ));
    }
    if config.power_profile.is_placeholder() {
        footnotes.push("energy and CO2 use placeholder power constants".into());
    }
    footnotes.push(format!(
        "power profile: {}",
        config.power_profile.source_note
    ));

    std::fs::create_dir(&run_dir).map_err(|source| {
        if source.kind() == std::io::ErrorKind::AlreadyExists {
            HarnessError::RunExists(run_dir.clone())
        } else {
            HarnessError::Io {
                path: run_dir.clone(),
                source,
            }
        }
    })?;
    let results_path = run_dir.join(RESULTS_FILE);
    write_results(&results_path, &rows)?;

    let summary = RunSummary {
        run_id: config.run_id.clone(),
        started_at,
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        config: snapshot,
        dataset_id: manifest.dataset_id.clone(),
        modality: manifest.modality,
        label_set: manifest.label_set.as_slice().to_vec(),
        split_source,
        n_samples: samples.len(),
        filter_applied: !artifacts.is_empty(),
        filter_artifacts: config
            .filter_artifact_paths
            .iter()
            .zip(&artifacts)
            .map(|(path, a)| ArtifactRef {
                path: path.clone(),
                target_label: a.target_label.clone(),
                n_questions: a.targeted_questions.len(),
                source_run_id: a.source_run_id.clone(),
            })
            .collect(),
        metrics: metrics.clone(),
        calibration: calibration.clone(),
        resources,
        errors: outcomes
            .iter()
            .filter_map(|o| {
                o.error.as_ref().map(|e| SampleError {
                    sample_id: o.sample_id.clone(),
                    message: e.to_string(),
                })
            })
            .collect(),
        footnotes,
    };
    let summary_path = run_dir.join(SUMMARY_FILE);
    summary.save(&summary_path)?;
    tracing::info!(
        run_id = %config.run_id,
        accuracy = metrics.accuracy,
        macro_f1 = metrics.macro_f1,
        unparsed = metrics.n_unparsed,
        "run finished"
    );

    Ok(RunOutput {
        run_dir,
        results_path,
        summary_path,
        outcomes,
        metrics,
        calibration,
        resources,
        summary,
    })
}
