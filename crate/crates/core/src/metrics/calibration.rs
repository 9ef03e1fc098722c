use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ground_truth, MetricsError};
use crate::backends::ClassificationOutcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    /// 0 for an empty bin.
    pub mean_confidence: f64,
    /// 0 for an empty bin.
    pub empirical_accuracy: f64,
    pub count: u64,
}

/// Reliability diagram over equal-width confidence bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub n_bins: usize,
    pub bins: Vec<CalibrationBin>,
    /// Expected calibration error: count-weighted mean |confidence - accuracy|.
    pub ece: f64,
    /// Average confidence minus run accuracy; positive means overconfident.
    pub calibration_gap: f64,
}

fn bin_index(confidence: f64, n_bins: usize) -> usize {
    ((confidence * n_bins as f64).floor() as usize).min(n_bins - 1)
}

/// Bins the outcomes that carry a confidence; the last bin includes 1.0.
/// `calibration_gap` compares their mean confidence with accuracy over all
/// outcomes, unparsed ones counted as wrong.
pub fn compute_calibration(
    outcomes: &[ClassificationOutcome],
    ground_truths: &HashMap<String, String>,
    n_bins: usize,
) -> Result<CalibrationCurve, MetricsError> {
    if n_bins == 0 {
        return Err(MetricsError::InvalidBins);
    }
    let mut conf_sum = vec![0.0f64; n_bins];
    let mut correct = vec![0u64; n_bins];
    let mut count = vec![0u64; n_bins];
    let mut n_correct_all = 0u64;
    for outcome in outcomes {
        let truth = ground_truth(&outcome.sample_id, ground_truths)?;
        let is_correct = outcome.is_correct(truth);
        n_correct_all += u64::from(is_correct);
        let Some(c) = outcome
            .confidence
            .filter(|_| !outcome.predicted_label.is_unparsed())
        else {
            continue;
        };
        let b = bin_index(c, n_bins);
        conf_sum[b] += c;
        correct[b] += u64::from(is_correct);
        count[b] += 1;
    }
    let total: u64 = count.iter().sum();
    if total == 0 {
        return Err(MetricsError::NoConfidences);
    }

    let mut bins = Vec::with_capacity(n_bins);
    let mut ece = 0.0;
    for b in 0..n_bins {
        let (mean_confidence, empirical_accuracy) = if count[b] > 0 {
            (
                conf_sum[b] / count[b] as f64,
                correct[b] as f64 / count[b] as f64,
            )
        } else {
            (0.0, 0.0)
        };
        ece += count[b] as f64 / total as f64 * (mean_confidence - empirical_accuracy).abs();
        bins.push(CalibrationBin {
            lower: b as f64 / n_bins as f64,
            upper: (b + 1) as f64 / n_bins as f64,
            mean_confidence,
            empirical_accuracy,
            count: count[b],
        });
    }
    let avg_confidence = conf_sum.iter().sum::<f64>() / total as f64;
    let accuracy = n_correct_all as f64 / outcomes.len() as f64;
    Ok(CalibrationCurve {
        n_bins,
        bins,
        ece,
        calibration_gap: avg_confidence - accuracy,
    })
}
