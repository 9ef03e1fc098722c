//! Dataset manifests, stratified split assignment and image payloads.
//!
//! Datasets are referenced by a line-oriented manifest and never bundled:
//!
//! ```text
//! dataset_id=chest-xray
//! modality=xray
//! labels=covid,normal,lung opacity,viral pneumonia
//! s0001	images/s0001.png	normal	train
//! s0002	images/s0002.png	covid	-
//! ```
//!
//! Header lines are `key=value`; sample lines carry four tab-separated
//! fields `sample_id`, `relative_path`, `ground_truth`, `split` where split is
//! `train`, `val`, `test` or `-` for unassigned. `labels=@canonical` selects
//! the built-in label preset for the manifest's modality. Blank lines and
//! lines starting with `#` are ignored.

#![allow(clippy::tabs_in_doc_comments)]

mod image;
mod manifest;
mod split;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{LabelError, LabelSet};

pub use image::{detect_media_type, encode_image, ImagePayload, MediaType};
pub use manifest::load_manifest;
pub use split::{assign_splits, SplitRatios};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest not found: {0}")]
    NotFound(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown field `{field}` at line {line}")]
    UnknownField { line: usize, field: String },
    #[error("missing field `{field}`{}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    MissingField { line: Option<usize>, field: String },
    #[error("sample `{sample_id}` has ground truth `{label}` which is not in the label set")]
    LabelNotInSet { sample_id: String, label: String },
    #[error("duplicate sample id `{sample_id}` at line {line}")]
    DuplicateSampleId { sample_id: String, line: usize },
    #[error("sample `{sample_id}` path `{path}` escapes the dataset root")]
    PathEscape { sample_id: String, path: String },
    #[error("invalid label set: {0}")]
    Labels(#[from] LabelError),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("label `{label}` has {count} samples but {needed} non-empty splits were requested")]
    ClassTooSmall {
        label: String,
        count: usize,
        needed: usize,
    },
    #[error("unsupported image format for sample `{sample_id}` ({path})")]
    UnsupportedFormat { sample_id: String, path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Xray,
    Ct,
    Mri,
}

impl Modality {
    /// Built-in label presets for the three reference datasets.
    pub fn canonical_labels(self) -> LabelSet {
        let labels: &[&str] = match self {
            Modality::Xray => &["covid", "normal", "lung opacity", "viral pneumonia"],
            Modality::Mri => &["glioma", "meningioma", "pituitary", "no tumor"],
            Modality::Ct => &[
                "normal",
                "adenocarcinoma",
                "large cell carcinoma",
                "squamous cell carcinoma",
            ],
        };
        LabelSet::new(labels.iter().copied()).expect("presets are valid label sets")
    }

    /// Human-readable imaging description used in prompts.
    pub fn description(self) -> &'static str {
        match self {
            Modality::Xray => "chest X-ray",
            Modality::Ct => "chest CT scan",
            Modality::Mri => "brain MRI scan",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Xray => "xray",
            Modality::Ct => "ct",
            Modality::Mri => "mri",
        }
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xray" | "x-ray" => Ok(Modality::Xray),
            "ct" => Ok(Modality::Ct),
            "mri" => Ok(Modality::Mri),
            other => Err(format!(
                "unknown modality `{other}` (expected xray, ct or mri)"
            )),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!(
                "unknown split `{other}` (expected train, val or test)"
            )),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    /// Relative to the manifest root; never absolute, never contains `..`.
    pub image_path: String,
    /// Canonical spelling from the manifest's label set.
    pub ground_truth: String,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub modality: Modality,
    pub label_set: LabelSet,
    pub samples: Vec<Sample>,
    pub root_dir: PathBuf,
}

impl DatasetManifest {
    pub fn sample(&self, sample_id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    pub fn samples_in(&self, split: Split) -> Vec<&Sample> {
        self.samples
            .iter()
            .filter(|s| s.split == Some(split))
            .collect()
    }

    pub fn all_assigned(&self) -> bool {
        self.samples.iter().all(|s| s.split.is_some())
    }

    /// `sample_id → ground_truth` for every sample.
    pub fn ground_truths(&self) -> HashMap<String, String> {
        self.samples
            .iter()
            .map(|s| (s.sample_id.clone(), s.ground_truth.clone()))
            .collect()
    }

    pub fn image_path(&self, sample: &Sample) -> PathBuf {
        self.root_dir.join(&sample.image_path)
    }

    /// Serialize to the manifest text format. The label set is always
    /// written out explicitly.
    pub fn to_manifest_text(&self) -> String {
        manifest::render(self)
    }
}

/// Rejects absolute paths and any parent-directory component.
pub(crate) fn check_relative_path(sample_id: &str, raw: &str) -> Result<(), DatasetError> {
    let path = Path::new(raw);
    let escapes = raw.is_empty()
        || path.is_absolute()
        || path.components().any(|c| {
            !matches!(
                c,
                std::path::Component::Normal(_) | std::path::Component::CurDir
            )
        });
    if escapes {
        return Err(DatasetError::PathEscape {
            sample_id: sample_id.to_string(),
            path: raw.to_string(),
        });
    }
    Ok(())
}
