use std::collections::HashMap;

use super::{ground_truth, MetricsError};
use crate::backends::ClassificationOutcome;
use crate::labels::LabelSet;

/// Counts indexed `(true, predicted)`, plus predictions outside the label
/// set tallied per true class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    label_set: LabelSet,
    counts: Vec<u64>,
    unparsed: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(label_set: LabelSet) -> Self {
        let n = label_set.len();
        Self {
            label_set,
            counts: vec![0; n * n],
            unparsed: vec![0; n],
        }
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.label_set.len() + predicted]
    }

    pub fn unparsed_for(&self, truth: usize) -> u64 {
        self.unparsed[truth]
    }

    pub fn unparsed_count(&self) -> u64 {
        self.unparsed.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.label_set.len()).map(|i| self.count(i, i)).sum()
    }

    /// Grid cells plus unparsed.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.unparsed_count()
    }

    /// Rows of the grid, true label major.
    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.label_set.len())
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn record(&mut self, truth: usize, predicted: Option<usize>) {
        match predicted {
            Some(p) => self.counts[truth * self.label_set.len() + p] += 1,
            None => self.unparsed[truth] += 1,
        }
    }
}

pub fn compute_confusion(
    outcomes: &[ClassificationOutcome],
    ground_truths: &HashMap<String, String>,
    label_set: &LabelSet,
) -> Result<ConfusionMatrix, MetricsError> {
    let mut cm = ConfusionMatrix::new(label_set.clone());
    for outcome in outcomes {
        let truth_label = ground_truth(&outcome.sample_id, ground_truths)?;
        let truth = label_set.index_of(truth_label).ok_or_else(|| {
            MetricsError::GroundTruthOutsideLabelSet {
                sample_id: outcome.sample_id.clone(),
                label: truth_label.to_string(),
            }
        })?;
        let predicted = outcome
            .predicted_label
            .label()
            .and_then(|l| label_set.index_of(l));
        cm.record(truth, predicted);
    }
    Ok(cm)
}
