use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::backends::{ClassificationOutcome, Prediction};
use crate::labels::UNPARSED;

pub const RESULTS_HEADER: [&str; 10] = [
    "sample_id",
    "ground_truth",
    "predicted_label",
    "confidence_score",
    "execution_time_s",
    "energy_wh",
    "full_response",
    "backend_id",
    "run_id",
    "timestamp",
];

/// One line of `results.csv`. An absent confidence is an empty field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sample_id: String,
    pub ground_truth: String,
    pub predicted_label: String,
    pub confidence_score: Option<f64>,
    pub execution_time_s: f64,
    pub energy_wh: f64,
    pub full_response: String,
    pub backend_id: String,
    pub run_id: String,
    pub timestamp: String,
}

impl ResultRow {
    pub fn prediction(&self) -> Prediction {
        if self.predicted_label == UNPARSED {
            Prediction::Unparsed
        } else {
            Prediction::Label(self.predicted_label.clone())
        }
    }

    /// The scored view of this row. Transport errors are not persisted
    /// separately; they already read as unparsed.
    pub fn to_outcome(&self) -> ClassificationOutcome {
        let predicted_label = self.prediction();
        ClassificationOutcome {
            sample_id: self.sample_id.clone(),
            confidence: self
                .confidence_score
                .filter(|_| !predicted_label.is_unparsed()),
            predicted_label,
            full_response: self.full_response.clone(),
            exec_time_s: self.execution_time_s,
            attempt_count: 1,
            error: None,
        }
    }
}

pub fn ground_truths(rows: &[ResultRow]) -> HashMap<String, String> {
    rows.iter()
        .map(|r| (r.sample_id.clone(), r.ground_truth.clone()))
        .collect()
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let csv_err = |e: csv::Error| HarnessError::Schema {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    writer.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush().map_err(HarnessError::io(path))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let schema = |reason: String| HarnessError::Schema {
        path: path.to_path_buf(),
        reason,
    };
    let file = std::fs::File::open(path).map_err(HarnessError::io(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header = reader.headers().map_err(|e| schema(e.to_string()))?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(schema(format!(
            "header `{}` does not match `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            RESULTS_HEADER.join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| schema(e.to_string())))
        .collect()
}
