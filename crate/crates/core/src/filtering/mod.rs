//! Confidence-filtered prompt refinement.
//!
//! Training-split outcomes are reduced to those whose ground truth and
//! prediction both equal a target label with confidence at or above a
//! threshold. The responses of the survivors are handed to an aggregator
//! model, which returns a feature summary and a list of targeted questions.
//! At test time those questions are injected into the classification prompt.

mod aggregate;
mod artifact;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{ClassificationOutcome, PromptBundle, QuestionGroup};
use crate::labels::{labels_match, LabelSet};

pub use aggregate::{
    aggregation_prompt, formulate_questions, formulate_questions_with_config,
    parse_aggregator_reply, CONTEXT_SEPARATOR,
};
pub use artifact::FilterArtifact;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter criteria: {0}")]
    InvalidCriteria(String),
    #[error("no ground truth for sample `{0}`")]
    MissingGroundTruth(String),
    #[error("no contexts to aggregate")]
    EmptyContexts,
    #[error("aggregator `{0}` cannot answer text-only prompts")]
    NotTextCapable(String),
    #[error("aggregation call failed: {0}")]
    Aggregation(String),
    #[error("aggregator reply contains no questions: {excerpt:?}")]
    NoQuestions { excerpt: String },
    #[error("prompt already carries targeted questions")]
    AlreadyFiltered,
    #[error("artifact for `{0}` has no targeted questions")]
    UnusableArtifact(String),
    #[error("artifact target label `{0}` is not in the prompt's label set")]
    LabelMismatch(String),
    #[error("more than one artifact targets `{0}`")]
    DuplicateTarget(String),
    #[error("artifact file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Backend(#[from] crate::backends::BackendError),
}

fn default_threshold() -> f64 {
    0.8
}
fn default_max_responses() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCriteria {
    pub target_label: String,
    /// Inclusive lower bound on confidence.
    #[serde(default = "default_threshold")]
    pub confidence_threshold: f64,
    /// Cap on responses fed to aggregation.
    #[serde(default = "default_max_responses")]
    pub max_responses: usize,
}

impl FilterCriteria {
    pub fn new(target_label: impl Into<String>) -> Self {
        Self {
            target_label: target_label.into(),
            confidence_threshold: default_threshold(),
            max_responses: default_max_responses(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.confidence_threshold = threshold;
        self
    }

    pub fn with_max_responses(mut self, max_responses: usize) -> Self {
        self.max_responses = max_responses;
        self
    }

    /// Range checks only. The threshold may exceed 1 for a criteria that
    /// deliberately selects nothing; that is caught as a zero-survivor stage.
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.target_label.trim().is_empty() {
            return Err(FilterError::InvalidCriteria("target_label is empty".into()));
        }
        if !(self.confidence_threshold.is_finite() && self.confidence_threshold >= 0.0) {
            return Err(FilterError::InvalidCriteria(format!(
                "confidence_threshold {} must be a non-negative number",
                self.confidence_threshold
            )));
        }
        if self.max_responses == 0 {
            return Err(FilterError::InvalidCriteria(
                "max_responses must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Full check against a dataset's label set, threshold inside [0, 1].
    pub fn validate_for(&self, label_set: &LabelSet) -> Result<(), FilterError> {
        self.validate()?;
        if self.confidence_threshold > 1.0 {
            return Err(FilterError::InvalidCriteria(format!(
                "confidence_threshold {} exceeds 1",
                self.confidence_threshold
            )));
        }
        if !label_set.contains(&self.target_label) {
            return Err(FilterError::LabelMismatch(self.target_label.clone()));
        }
        Ok(())
    }

    fn keeps(&self, outcome: &ClassificationOutcome, ground_truth: &str) -> bool {
        labels_match(ground_truth, &self.target_label)
            && outcome
                .predicted_label
                .label()
                .is_some_and(|p| labels_match(p, &self.target_label))
            && outcome
                .confidence
                .is_some_and(|c| c >= self.confidence_threshold)
    }
}

fn ground_truth_of<'g>(
    outcome: &ClassificationOutcome,
    ground_truths: &'g HashMap<String, String>,
) -> Result<&'g str, FilterError> {
    ground_truths
        .get(&outcome.sample_id)
        .map(String::as_str)
        .ok_or_else(|| FilterError::MissingGroundTruth(outcome.sample_id.clone()))
}

/// Outcomes whose ground truth and prediction both equal the target label
/// and whose confidence is at least the threshold, in input order.
pub fn select_high_confidence<'a>(
    outcomes: &'a [ClassificationOutcome],
    ground_truths: &HashMap<String, String>,
    criteria: &FilterCriteria,
) -> Result<Vec<&'a ClassificationOutcome>, FilterError> {
    criteria.validate()?;
    let mut kept = Vec::new();
    for outcome in outcomes {
        let truth = ground_truth_of(outcome, ground_truths)?;
        if criteria.keeps(outcome, truth) {
            kept.push(outcome);
        }
    }
    Ok(kept)
}

/// Response texts of the first `max_responses` filtered outcomes.
pub fn extract_contexts(
    filtered: &[&ClassificationOutcome],
    criteria: &FilterCriteria,
) -> Vec<String> {
    filtered
        .iter()
        .take(criteria.max_responses)
        .map(|o| o.full_response.clone())
        .collect()
}

/// Survivor counts after each filtering stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub total: usize,
    /// Ground truth and prediction both equal the target label.
    pub label_matched: usize,
    pub above_threshold: usize,
    pub sampled: usize,
}

impl StageCounts {
    /// Name of the first stage that left nothing, if any.
    pub fn empty_stage(&self) -> Option<&'static str> {
        if self.total == 0 {
            Some("total")
        } else if self.label_matched == 0 {
            Some("label-matched")
        } else if self.above_threshold == 0 {
            Some("above-threshold")
        } else if self.sampled == 0 {
            Some("sampled")
        } else {
            None
        }
    }
}

pub fn stage_counts(
    outcomes: &[ClassificationOutcome],
    ground_truths: &HashMap<String, String>,
    criteria: &FilterCriteria,
) -> Result<StageCounts, FilterError> {
    let mut label_matched = 0;
    for outcome in outcomes {
        let truth = ground_truth_of(outcome, ground_truths)?;
        let pred_matches = outcome
            .predicted_label
            .label()
            .is_some_and(|p| labels_match(p, &criteria.target_label));
        if labels_match(truth, &criteria.target_label) && pred_matches {
            label_matched += 1;
        }
    }
    let above_threshold = select_high_confidence(outcomes, ground_truths, criteria)?.len();
    Ok(StageCounts {
        total: outcomes.len(),
        label_matched,
        above_threshold,
        sampled: above_threshold.min(criteria.max_responses),
    })
}

/// Inject one artifact's questions into a question-free bundle.
pub fn apply_filter(
    bundle: &PromptBundle,
    artifact: &FilterArtifact,
) -> Result<PromptBundle, FilterError> {
    apply_filters(bundle, std::slice::from_ref(artifact))
}

/// Inject several artifacts (one per target label), each under its own heading.
pub fn apply_filters(
    bundle: &PromptBundle,
    artifacts: &[FilterArtifact],
) -> Result<PromptBundle, FilterError> {
    if bundle.has_questions() {
        return Err(FilterError::AlreadyFiltered);
    }
    let mut groups: Vec<QuestionGroup> = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        if artifact.targeted_questions.is_empty() {
            return Err(FilterError::UnusableArtifact(artifact.target_label.clone()));
        }
        let Some(label) = bundle.label_set.resolve(&artifact.target_label) else {
            return Err(FilterError::LabelMismatch(artifact.target_label.clone()));
        };
        if groups.iter().any(|g| labels_match(&g.target_label, label)) {
            return Err(FilterError::DuplicateTarget(label.to_string()));
        }
        groups.push(QuestionGroup {
            target_label: label.to_string(),
            questions: artifact.targeted_questions.clone(),
        });
    }
    Ok(PromptBundle {
        targeted_questions: groups,
        ..bundle.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{build_prompt, Prediction};
    use crate::dataset::Modality;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn outcome(id: &str, label: &str, confidence: Option<f64>) -> ClassificationOutcome {
        ClassificationOutcome {
            sample_id: id.into(),
            predicted_label: Prediction::Label(label.into()),
            confidence,
            full_response: format!("response for {id}"),
            exec_time_s: 1.0,
            attempt_count: 1,
            error: None,
        }
    }

    fn truths(pairs: &[(&str, &str)]) -> HashMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn artifact(label: &str, questions: &[&str]) -> FilterArtifact {
        FilterArtifact {
            target_label: label.into(),
            aggregated_context: "summary".into(),
            targeted_questions: questions.iter().map(|q| q.to_string()).collect(),
            source_run_id: "train".into(),
            criteria: FilterCriteria::new(label),
            created_at: Utc.with_ymd_and_hms(2026, 1, 2, 3, 4, 5).unwrap(),
        }
    }

    #[test]
    fn selects_only_confident_matches() {
        let outs = vec![
            outcome("s1", "normal", Some(0.95)),
            outcome("s2", "normal", Some(0.79)),
            outcome("s3", "covid", Some(0.90)),
        ];
        let gt = truths(&[("s1", "normal"), ("s2", "normal"), ("s3", "covid")]);
        let kept = select_high_confidence(&outs, &gt, &FilterCriteria::new("normal")).unwrap();
        let ids: Vec<&str> = kept.iter().map(|o| o.sample_id.as_str()).collect();
        assert_eq!(ids, ["s1"]);
    }

    #[test]
    fn threshold_is_inclusive() {
        let outs = vec![outcome("s1", "normal", Some(0.80))];
        let gt = truths(&[("s1", "normal")]);
        let kept = select_high_confidence(&outs, &gt, &FilterCriteria::new("normal")).unwrap();
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn empty_and_missing_truth() {
        let gt = HashMap::new();
        assert!(
            select_high_confidence(&[], &gt, &FilterCriteria::new("normal"))
                .unwrap()
                .is_empty()
        );
        let outs = vec![outcome("s1", "normal", Some(0.9))];
        assert!(matches!(
            select_high_confidence(&outs, &gt, &FilterCriteria::new("normal")),
            Err(FilterError::MissingGroundTruth(id)) if id == "s1"
        ));
    }

    #[test]
    fn wrong_ground_truth_or_missing_confidence_excluded() {
        let outs = vec![
            outcome("a", "normal", Some(0.99)),
            outcome("b", "normal", None),
            outcome("c", "Normal", Some(0.9)),
        ];
        let gt = truths(&[("a", "covid"), ("b", "normal"), ("c", "normal")]);
        let kept = select_high_confidence(&outs, &gt, &FilterCriteria::new("normal")).unwrap();
        let ids: Vec<&str> = kept.iter().map(|o| o.sample_id.as_str()).collect();
        assert_eq!(ids, ["c"]);
    }

    #[test]
    fn context_truncation() {
        let outs: Vec<_> = (0..5)
            .map(|i| outcome(&format!("s{i}"), "normal", Some(0.9)))
            .collect();
        let refs: Vec<&ClassificationOutcome> = outs.iter().collect();
        let three = extract_contexts(&refs, &FilterCriteria::new("normal").with_max_responses(3));
        assert_eq!(
            three,
            ["response for s0", "response for s1", "response for s2"]
        );
        let all = extract_contexts(
            &refs[..2],
            &FilterCriteria::new("normal").with_max_responses(10),
        );
        assert_eq!(all.len(), 2);
        assert!(extract_contexts(&[], &FilterCriteria::new("normal")).is_empty());
    }

    #[test]
    fn stage_counts_and_empty_stage() {
        let outs = vec![
            outcome("a", "normal", Some(0.95)),
            outcome("b", "normal", Some(0.5)),
            outcome("c", "covid", Some(0.9)),
        ];
        let gt = truths(&[("a", "normal"), ("b", "normal"), ("c", "normal")]);
        let counts = stage_counts(&outs, &gt, &FilterCriteria::new("normal")).unwrap();
        assert_eq!(
            counts,
            StageCounts {
                total: 3,
                label_matched: 2,
                above_threshold: 1,
                sampled: 1
            }
        );
        assert_eq!(counts.empty_stage(), None);
        let strict = FilterCriteria::new("normal").with_threshold(1.01);
        let counts = stage_counts(&outs, &gt, &strict).unwrap();
        assert_eq!(counts.empty_stage(), Some("above-threshold"));
    }

    #[test]
    fn apply_filter_fields() {
        let labels = LabelSet::new(["normal", "covid"]).unwrap();
        let base = build_prompt(&labels, Modality::Xray, &[]).unwrap();
        let filtered = apply_filter(&base, &artifact("normal", &["Q1", "Q2"])).unwrap();
        assert_eq!(filtered.questions().collect::<Vec<_>>(), ["Q1", "Q2"]);
        assert_eq!(filtered.system_text, base.system_text);
        assert_eq!(filtered.user_text, base.user_text);
        assert_eq!(filtered.label_set, base.label_set);
        assert_eq!(filtered.response_contract, base.response_contract);

        assert!(matches!(
            apply_filter(&filtered, &artifact("normal", &["Q3"])),
            Err(FilterError::AlreadyFiltered)
        ));
        assert!(matches!(
            apply_filter(&base, &artifact("normal", &[])),
            Err(FilterError::UnusableArtifact(_))
        ));
        assert!(matches!(
            apply_filter(&base, &artifact("glioma", &["Q"])),
            Err(FilterError::LabelMismatch(_))
        ));
    }

    #[test]
    fn multi_class_union_under_headings() {
        let labels = LabelSet::new(["normal", "covid"]).unwrap();
        let base = build_prompt(&labels, Modality::Xray, &[]).unwrap();
        let both = apply_filters(
            &base,
            &[
                artifact("normal", &["Is it clear?"]),
                artifact("covid", &["Ground glass?"]),
            ],
        )
        .unwrap();
        let text = both.render_user_prompt();
        let n = text.find("Key questions for \"normal\"").unwrap();
        let c = text.find("Key questions for \"covid\"").unwrap();
        assert!(n < text.find("Is it clear?").unwrap());
        assert!(c < text.find("Ground glass?").unwrap());
        assert!(matches!(
            apply_filters(
                &base,
                &[artifact("normal", &["a"]), artifact("Normal", &["b"])]
            ),
            Err(FilterError::DuplicateTarget(_))
        ));
        let direct = build_prompt(&labels, Modality::Xray, &[artifact("normal", &["Q"])]).unwrap();
        assert_eq!(
            direct,
            apply_filter(&base, &artifact("normal", &["Q"])).unwrap()
        );
    }

    fn random_outcomes() -> impl Strategy<Value = Vec<(String, Option<String>, Option<f64>)>> {
        let label = prop::sample::select(vec!["normal", "covid", "lung opacity"]);
        prop::collection::vec(
            (
                label.clone(),
                prop::option::weighted(0.9, label),
                prop::option::weighted(0.9, 0.0f64..=1.0),
            ),
            0..40,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(t, p, c)| (t.to_string(), p.map(str::to_string), c))
                .collect()
        })
    }

    fn materialize(
        raw: &[(String, Option<String>, Option<f64>)],
    ) -> (Vec<ClassificationOutcome>, HashMap<String, String>) {
        let mut outs = Vec::new();
        let mut gt = HashMap::new();
        for (i, (truth, pred, conf)) in raw.iter().enumerate() {
            let id = format!("s{i:03}");
            gt.insert(id.clone(), truth.clone());
            let mut o = outcome(&id, pred.as_deref().unwrap_or("x"), *conf);
            if pred.is_none() {
                o.predicted_label = Prediction::Unparsed;
                o.confidence = None;
            }
            outs.push(o);
        }
        (outs, gt)
    }

    proptest! {
        #[test]
        fn selection_is_the_triple_predicate(raw in random_outcomes(), t in 0.0f64..=1.0) {
            let (outs, gt) = materialize(&raw);
            let criteria = FilterCriteria::new("normal").with_threshold(t);
            let kept = select_high_confidence(&outs, &gt, &criteria).unwrap();
            let brute: Vec<&str> = raw.iter().enumerate()
                .filter(|(_, (truth, pred, conf))| {
                    truth == "normal" && pred.as_deref() == Some("normal") && conf.is_some_and(|c| c >= t)
                })
                .map(|(i, _)| outs[i].sample_id.as_str())
                .collect();
            let got: Vec<&str> = kept.iter().map(|o| o.sample_id.as_str()).collect();
            prop_assert_eq!(got, brute);
        }

        #[test]
        fn raising_threshold_never_grows_selection(raw in random_outcomes(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (outs, gt) = materialize(&raw);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let low = select_high_confidence(&outs, &gt, &FilterCriteria::new("normal").with_threshold(lo)).unwrap();
            let high = select_high_confidence(&outs, &gt, &FilterCriteria::new("normal").with_threshold(hi)).unwrap();
            prop_assert!(high.len() <= low.len());
            for o in &high {
                prop_assert!(low.iter().any(|l| l.sample_id == o.sample_id));
            }
        }
    }
}
