//! Label sets and label-string normalization.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Text written in place of a label when no label could be extracted.
pub const UNPARSED: &str = "unparsed";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("label set is empty")]
    Empty,
    #[error("label `{0}` is empty after trimming")]
    Blank(String),
    #[error("duplicate label `{0}`")]
    Duplicate(String),
    #[error("label `{0}` is reserved")]
    Reserved(String),
    #[error("label `{0}` contains a tab, comma or line break")]
    IllegalCharacter(String),
}

/// Canonical comparison form: trimmed, lowercased, internal whitespace runs
/// collapsed to a single space.
pub fn normalize(label: &str) -> String {
    label
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn labels_match(a: &str, b: &str) -> bool {
    normalize(a) == normalize(b)
}

/// An ordered, duplicate-free, non-empty list of class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    labels: Vec<String>,
    normalized: Vec<String>,
}

impl LabelSet {
    pub fn new<I, S>(labels: I) -> Result<Self, LabelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vec::new();
        let mut normalized: Vec<String> = Vec::new();
        for raw in labels {
            let raw = raw.into();
            let label = raw.trim().to_string();
            if label.is_empty() {
                return Err(LabelError::Blank(raw));
            }
            if label.contains(['\t', ',', '\n', '\r']) {
                return Err(LabelError::IllegalCharacter(label));
            }
            let norm = normalize(&label);
            if norm == UNPARSED {
                return Err(LabelError::Reserved(label));
            }
            if normalized.contains(&norm) {
                return Err(LabelError::Duplicate(label));
            }
            normalized.push(norm);
            out.push(label);
        }
        if out.is_empty() {
            return Err(LabelError::Empty);
        }
        Ok(Self {
            labels: out,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    /// Position of the label equal to `candidate` under normalization.
    pub fn index_of(&self, candidate: &str) -> Option<usize> {
        let norm = normalize(candidate);
        self.normalized.iter().position(|n| *n == norm)
    }

    /// The canonical spelling of `candidate`, if it names a member.
    pub fn resolve(&self, candidate: &str) -> Option<&str> {
        self.index_of(candidate).map(|i| self.labels[i].as_str())
    }

    pub fn contains(&self, candidate: &str) -> bool {
        self.index_of(candidate).is_some()
    }

    /// Normalized forms, parallel to [`LabelSet::iter`].
    pub(crate) fn normalized(&self) -> &[String] {
        &self.normalized
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = LabelError;

    fn try_from(value: Vec<String>) -> Result<Self, Self::Error> {
        LabelSet::new(value)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(value: LabelSet) -> Self {
        value.labels
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.labels.join(", "))
    }
}
