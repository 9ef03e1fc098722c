//! Classification quality metrics.
//!
//! Unparsed predictions count as wrong: they sit in the accuracy denominator,
//! add a false negative to their true class, and are left out of confidence
//! statistics. Precision, recall and F1 are 0 when their denominator is 0;
//! the affected labels are listed in [`MetricsReport::zero_division`].

mod calibration;
mod confusion;

use std::collections::HashMap;

use thiserror::Error;

use crate::backends::ClassificationOutcome;

pub use calibration::{compute_calibration, CalibrationBin, CalibrationCurve};
pub use confusion::{compute_confusion, ConfusionMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("nothing to score")]
    Empty,
    #[error("no ground truth for sample `{0}`")]
    MissingGroundTruth(String),
    #[error("sample `{sample_id}` has ground truth `{label}` outside the label set")]
    GroundTruthOutsideLabelSet { sample_id: String, label: String },
    #[error("no outcome carries a confidence")]
    NoConfidences,
    #[error("n_bins must be >= 1")]
    InvalidBins,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Outcomes whose ground truth is this label.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// In label-set order.
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub avg_confidence: Option<f64>,
    pub avg_exec_time_s: f64,
    pub n_scored: u64,
    pub n_unparsed: u64,
    pub zero_division: Vec<String>,
}

impl MetricsReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class
            .iter()
            .find(|c| crate::labels::labels_match(&c.label, label))
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(
    cm: &ConfusionMatrix,
    outcomes: &[ClassificationOutcome],
) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 || outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = cm.label_set().len();
    let mut per_class = Vec::with_capacity(n);
    let mut zero_division = Vec::new();
    for c in 0..n {
        let tp = cm.count(c, c);
        let predicted: u64 = (0..n).map(|t| cm.count(t, c)).sum();
        let actual: u64 = (0..n).map(|p| cm.count(c, p)).sum::<u64>() + cm.unparsed_for(c);
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        let label = cm.label_set().get(c).expect("index in range").to_string();
        if precision.is_none() || recall.is_none() {
            zero_division.push(label.clone());
        }
        let (p, r) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
        let f1 = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            label,
            precision: p,
            recall: r,
            f1,
            support: actual,
        });
    }
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64;
    let confidences: Vec<f64> = outcomes
        .iter()
        .filter(|o| !o.predicted_label.is_unparsed())
        .filter_map(|o| o.confidence)
        .collect();
    let avg_confidence = (!confidences.is_empty())
        .then(|| confidences.iter().sum::<f64>() / confidences.len() as f64);
    let avg_exec_time_s =
        outcomes.iter().map(|o| o.exec_time_s).sum::<f64>() / outcomes.len() as f64;
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        per_class,
        macro_f1,
        avg_confidence,
        avg_exec_time_s,
        n_scored: total,
        n_unparsed: cm.unparsed_count(),
        zero_division,
    })
}

pub(crate) fn ground_truth<'g>(
    sample_id: &str,
    ground_truths: &'g HashMap<String, String>,
) -> Result<&'g str, MetricsError> {
    ground_truths
        .get(sample_id)
        .map(String::as_str)
        .ok_or_else(|| MetricsError::MissingGroundTruth(sample_id.to_string()))
}
