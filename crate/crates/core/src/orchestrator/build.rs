use std::path::{Path, PathBuf};

use super::results::{ground_truths, read_results};
use super::run::RunSummary;
use super::{HarnessError, RunConfig, RESULTS_FILE, SUMMARY_FILE};
use crate::backends::{Backend, ClassificationOutcome};
use crate::dataset::Split;
use crate::filtering::{
    extract_contexts, formulate_questions, select_high_confidence, stage_counts, FilterArtifact,
    FilterCriteria, FilterError, StageCounts,
};
use crate::labels::LabelSet;

#[derive(Debug, Clone)]
pub struct BuildFilterOutput {
    pub artifact_path: PathBuf,
    pub artifact: FilterArtifact,
    pub stage_counts: StageCounts,
}

/// Build a filter artifact from a train-split `results.csv`.
///
/// When a `summary.json` sits next to the results it must report the train
/// split, and its label set is used to check the target label.
pub async fn build_filter(
    results_path: &Path,
    criteria: &FilterCriteria,
    aggregator: &Backend,
    out_path: &Path,
) -> Result<BuildFilterOutput, HarnessError> {
    if !results_path.is_file() {
        return Err(HarnessError::NoTrainResults(format!(
            "{} does not exist",
            results_path.display()
        )));
    }
    criteria.validate()?;
    let summary_path = results_path.with_file_name(SUMMARY_FILE);
    if summary_path.is_file() {
        let summary = RunSummary::load(&summary_path)?;
        if summary.config.split != Split::Train {
            return Err(HarnessError::NoTrainResults(format!(
                "{} holds `{}` split results",
                results_path.display(),
                summary.config.split
            )));
        }
        let labels = LabelSet::new(summary.label_set).map_err(|e| HarnessError::Schema {
            path: summary_path.clone(),
            reason: e.to_string(),
        })?;
        if !labels.contains(&criteria.target_label) {
            return Err(FilterError::LabelMismatch(criteria.target_label.clone()).into());
        }
    } else {
        tracing::warn!(path = %results_path.display(), "no run summary next to results; split not verified");
    }

    let rows = read_results(results_path)?;
    if rows.is_empty() {
        return Err(HarnessError::NoTrainResults(format!(
            "{} has no rows",
            results_path.display()
        )));
    }
    let truths = ground_truths(&rows);
    let outcomes: Vec<ClassificationOutcome> = rows.iter().map(|r| r.to_outcome()).collect();

    let counts = stage_counts(&outcomes, &truths, criteria)?;
    tracing::info!(
        total = counts.total,
        label_matched = counts.label_matched,
        above_threshold = counts.above_threshold,
        sampled = counts.sampled,
        target = %criteria.target_label,
        "filter stages"
    );
    if let Some(stage) = counts.empty_stage() {
        return Err(HarnessError::ZeroSurvivors { stage, counts });
    }

    let selected = select_high_confidence(&outcomes, &truths, criteria)?;
    let contexts = extract_contexts(&selected, criteria);
    let source_run_id = rows[0].run_id.clone();
    let artifact = formulate_questions(&contexts, aggregator, criteria, &source_run_id).await?;
    artifact.save(out_path)?;
    tracing::info!(path = %out_path.display(), questions = artifact.targeted_questions.len(), "artifact written");
    Ok(BuildFilterOutput {
        artifact_path: out_path.to_path_buf(),
        artifact,
        stage_counts: counts,
    })
}

/// [`build_filter`] over the results of `config`'s run, writing
/// `filter-<label>.artifact` into the run directory.
pub async fn build_filter_for_run(
    config: &RunConfig,
    criteria: &FilterCriteria,
    aggregator: &Backend,
) -> Result<BuildFilterOutput, HarnessError> {
    let run_dir = config.run_dir();
    let slug: String = criteria
        .target_label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    let out = run_dir.join(format!("filter-{slug}.artifact"));
    build_filter(&run_dir.join(RESULTS_FILE), criteria, aggregator, &out).await
}
