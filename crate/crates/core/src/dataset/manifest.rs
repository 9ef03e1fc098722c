use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{check_relative_path, DatasetError, DatasetManifest, Modality, Sample, Split};
use crate::labels::LabelSet;

const CANONICAL_LABELS: &str = "@canonical";

/// Read and validate a manifest file. The manifest's directory becomes the
/// dataset root.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::NotFound(path.to_path_buf())
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let root_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    parse(&text, root_dir)
}

struct RawSample {
    line: usize,
    sample_id: String,
    image_path: String,
    ground_truth: String,
    split: Option<Split>,
}

pub(crate) fn parse(text: &str, root_dir: PathBuf) -> Result<DatasetManifest, DatasetError> {
    let mut dataset_id = None;
    let mut modality = None;
    let mut labels: Option<String> = None;
    let mut raw_samples = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        if trimmed.contains('\t') {
            raw_samples.push(parse_sample_line(trimmed, line_no)?);
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(DatasetError::Malformed {
                line: line_no,
                reason: "expected `key=value` header or tab-separated sample".into(),
            });
        };
        let value = value.trim().to_string();
        let slot = match key.trim() {
            "dataset_id" => &mut dataset_id,
            "modality" => &mut modality,
            "labels" => &mut labels,
            other => {
                return Err(DatasetError::UnknownField {
                    line: line_no,
                    field: other.to_string(),
                })
            }
        };
        if slot.is_some() {
            return Err(DatasetError::Malformed {
                line: line_no,
                reason: format!("header `{}` given twice", key.trim()),
            });
        }
        *slot = Some(value);
    }

    let missing = |field: &str| DatasetError::MissingField {
        line: None,
        field: field.to_string(),
    };
    let dataset_id = dataset_id
        .filter(|d| !d.is_empty())
        .ok_or_else(|| missing("dataset_id"))?;
    let modality: Modality = modality
        .ok_or_else(|| missing("modality"))?
        .parse()
        .map_err(|reason| DatasetError::Malformed { line: 0, reason })?;
    let labels = labels.ok_or_else(|| missing("labels"))?;
    let label_set = if labels == CANONICAL_LABELS {
        modality.canonical_labels()
    } else {
        LabelSet::new(labels.split(','))?
    };

    let mut seen = HashSet::new();
    let mut samples = Vec::with_capacity(raw_samples.len());
    for raw in raw_samples {
        if !seen.insert(raw.sample_id.clone()) {
            return Err(DatasetError::DuplicateSampleId {
                sample_id: raw.sample_id,
                line: raw.line,
            });
        }
        let Some(canonical) = label_set.resolve(&raw.ground_truth) else {
            return Err(DatasetError::LabelNotInSet {
                sample_id: raw.sample_id,
                label: raw.ground_truth,
            });
        };
        check_relative_path(&raw.sample_id, &raw.image_path)?;
        samples.push(Sample {
            ground_truth: canonical.to_string(),
            sample_id: raw.sample_id,
            image_path: raw.image_path,
            split: raw.split,
        });
    }

    Ok(DatasetManifest {
        dataset_id,
        modality,
        label_set,
        samples,
        root_dir,
    })
}

fn parse_sample_line(line: &str, line_no: usize) -> Result<RawSample, DatasetError> {
    const FIELDS: [&str; 4] = ["sample_id", "relative_path", "ground_truth", "split"];
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() > FIELDS.len() {
        return Err(DatasetError::UnknownField {
            line: line_no,
            field: parts[FIELDS.len()].to_string(),
        });
    }
    if parts.len() < FIELDS.len() {
        return Err(DatasetError::MissingField {
            line: Some(line_no),
            field: FIELDS[parts.len()].to_string(),
        });
    }
    for (value, name) in parts.iter().zip(FIELDS) {
        if value.trim().is_empty() {
            return Err(DatasetError::MissingField {
                line: Some(line_no),
                field: name.to_string(),
            });
        }
    }
    let split = match parts[3].trim() {
        "-" => None,
        other => Some(other.parse().map_err(|reason| DatasetError::Malformed {
            line: line_no,
            reason,
        })?),
    };
    Ok(RawSample {
        line: line_no,
        sample_id: parts[0].trim().to_string(),
        image_path: parts[1].trim().to_string(),
        ground_truth: parts[2].trim().to_string(),
        split,
    })
}

pub(crate) fn render(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dataset_id={}", manifest.dataset_id);
    let _ = writeln!(out, "modality={}", manifest.modality);
    let _ = writeln!(out, "labels={}", manifest.label_set.as_slice().join(","));
    for s in &manifest.samples {
        let split = s.split.map(Split::as_str).unwrap_or("-");
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.sample_id, s.image_path, s.ground_truth, split
        );
    }
    out
}
