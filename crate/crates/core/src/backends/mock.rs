//! Scripted backend.
//!
//! Script lines are `sample_id<TAB>label<TAB>confidence<TAB>response_text`
//! with an optional fifth `exec_time_s` column giving the simulated call
//! duration (0 when omitted). `confidence` may be `-` for none. In
//! `response_text`, `\n`, `\t` and `\\` are unescaped. Entries keyed
//! `@aggregate` or `@aggregate:<label>` answer text-only completions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    BackendConfig, BackendError, ClassificationOutcome, ErrorKind, OutcomeError, Prediction,
    PromptBundle,
};
use crate::dataset::ImagePayload;
use crate::labels::normalize;

pub const AGGREGATE_KEY: &str = "@aggregate";

#[derive(Debug, Clone, PartialEq)]
pub struct MockEntry {
    pub label: String,
    pub confidence: Option<f64>,
    pub response_text: String,
    pub exec_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockScript {
    entries: BTreeMap<String, MockEntry>,
}

fn unescape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\t', "\\t")
        .replace('\r', "\\r")
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sample_id: impl Into<String>, entry: MockEntry) {
        self.entries.insert(sample_id.into(), entry);
    }

    pub fn get(&self, key: &str) -> Option<&MockEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|source| BackendError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, BackendError> {
        let err = |line: usize, reason: String| BackendError::MockScript {
            path: PathBuf::from(origin),
            line,
            reason,
        };
        let mut script = Self::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if !(4..=5).contains(&cols.len()) {
                return Err(err(
                    line_no,
                    format!("expected 4 or 5 tab-separated fields, got {}", cols.len()),
                ));
            }
            let confidence = match cols[2].trim() {
                "" | "-" => None,
                raw => {
                    let c: f64 = raw
                        .parse()
                        .map_err(|e| err(line_no, format!("confidence `{raw}`: {e}")))?;
                    if !(0.0..=1.0).contains(&c) {
                        return Err(err(line_no, format!("confidence {c} outside [0, 1]")));
                    }
                    Some(c)
                }
            };
            let exec_time_s = match cols.get(4).map(|s| s.trim()) {
                None | Some("") | Some("-") => None,
                Some(raw) => {
                    let t: f64 = raw
                        .parse()
                        .map_err(|e| err(line_no, format!("exec_time_s `{raw}`: {e}")))?;
                    if !(t.is_finite() && t >= 0.0) {
                        return Err(err(line_no, format!("exec_time_s {t} must be >= 0")));
                    }
                    Some(t)
                }
            };
            let sample_id = cols[0].trim().to_string();
            if script.entries.contains_key(&sample_id) {
                return Err(err(line_no, format!("duplicate entry `{sample_id}`")));
            }
            script.entries.insert(
                sample_id,
                MockEntry {
                    label: cols[1].trim().to_string(),
                    confidence,
                    response_text: unescape(cols[3]),
                    exec_time_s,
                },
            );
        }
        Ok(script)
    }

    /// Inverse of [`MockScript::parse`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (id, e) in &self.entries {
            let conf = e
                .confidence
                .map(|c| c.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = write!(
                out,
                "{id}\t{}\t{conf}\t{}",
                e.label,
                escape(&e.response_text)
            );
            if let Some(t) = e.exec_time_s {
                let _ = write!(out, "\t{t}");
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) struct MockAdapter {
    script: MockScript,
}

impl MockAdapter {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let path = config
            .mock_script_path
            .as_deref()
            .ok_or_else(|| BackendError::Config {
                backend_id: config.backend_id.clone(),
                reason: "kind = mock requires mock_script_path".into(),
            })?;
        Ok(Self {
            script: MockScript::load(path)?,
        })
    }

    pub fn classify(&self, bundle: &PromptBundle, payload: &ImagePayload) -> ClassificationOutcome {
        let Some(entry) = self.script.get(&payload.sample_id) else {
            return ClassificationOutcome::failed(
                &payload.sample_id,
                OutcomeError {
                    kind: ErrorKind::MissingScriptEntry,
                    message: format!("no script entry for `{}`", payload.sample_id),
                },
                1,
                0.0,
            );
        };
        let predicted_label = match bundle.label_set.resolve(&entry.label) {
            Some(l) => Prediction::Label(l.to_string()),
            None => Prediction::Unparsed,
        };
        let confidence = if predicted_label.is_unparsed() {
            None
        } else {
            entry.confidence
        };
        ClassificationOutcome {
            sample_id: payload.sample_id.clone(),
            predicted_label,
            confidence,
            full_response: entry.response_text.clone(),
            exec_time_s: entry.exec_time_s.unwrap_or(0.0),
            attempt_count: 1,
            error: None,
        }
    }

    pub fn complete(&self, key: &str) -> Result<String, OutcomeError> {
        let specific = format!("{AGGREGATE_KEY}:{}", normalize(key));
        self.script
            .get(&specific)
            .or_else(|| self.script.get(AGGREGATE_KEY))
            .map(|e| e.response_text.clone())
            .ok_or_else(|| OutcomeError {
                kind: ErrorKind::MissingScriptEntry,
                message: format!("no `{specific}` or `{AGGREGATE_KEY}` entry in mock script"),
            })
    }
}
