//! Filter artifact file format.
//!
//! ```text
//! # medbench filter artifact v1
//! target_label=normal
//! threshold=0.8
//! max_responses=50
//! source_run_id=train-01
//! created_at=2026-10-19T08:30:00Z
//! aggregated_context_lines=2
//! Clear lung fields without focal consolidation.
//! Sharp costophrenic angles.
//! questions=2
//! 1. Are both lung fields uniformly radiolucent?
//! 2. Are the costophrenic angles sharp?
//! ```
//!
//! The context block is length-prefixed so it may contain any text; all
//! other values are single-line.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{FilterCriteria, FilterError};

const MAGIC: &str = "# medbench filter artifact v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterArtifact {
    pub target_label: String,
    pub aggregated_context: String,
    pub targeted_questions: Vec<String>,
    pub source_run_id: String,
    pub criteria: FilterCriteria,
    pub created_at: DateTime<Utc>,
}

fn single_line(field: &str, value: &str) -> Result<(), FilterError> {
    if value.contains(['\n', '\r']) {
        return Err(FilterError::Format {
            line: 0,
            reason: format!("{field} must be a single line"),
        });
    }
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Split<'a, char>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str), FilterError> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| FilterError::Format {
                line: 0,
                reason: format!("unexpected end of file, expected {what}"),
            })
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str), FilterError> {
        let (no, line) = self.next_line(key)?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| FilterError::Format {
                line: no,
                reason: format!("expected `{key}=`"),
            })?;
        Ok((no, value))
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T, FilterError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| FilterError::Format {
        line,
        reason: format!("{key}: {e}"),
    })
}

impl FilterArtifact {
    pub fn to_text(&self) -> Result<String, FilterError> {
        single_line("target_label", &self.target_label)?;
        single_line("source_run_id", &self.source_run_id)?;
        for q in &self.targeted_questions {
            single_line("question", q)?;
            if q.trim().is_empty() || q.trim() != q {
                return Err(FilterError::Format {
                    line: 0,
                    reason: format!("question {q:?} is blank or has surrounding whitespace"),
                });
            }
        }
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("target_label={}\n", self.target_label));
        out.push_str(&format!(
            "threshold={}\n",
            self.criteria.confidence_threshold
        ));
        out.push_str(&format!("max_responses={}\n", self.criteria.max_responses));
        out.push_str(&format!("source_run_id={}\n", self.source_run_id));
        out.push_str(&format!(
            "created_at={}\n",
            self.created_at.to_rfc3339_opts(SecondsFormat::AutoSi, true)
        ));
        let context_lines: Vec<&str> = self.aggregated_context.split('\n').collect();
        out.push_str(&format!(
            "aggregated_context_lines={}\n",
            context_lines.len()
        ));
        for line in context_lines {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&format!("questions={}\n", self.targeted_questions.len()));
        for (i, q) in self.targeted_questions.iter().enumerate() {
            out.push_str(&format!("{}. {}\n", i + 1, q));
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self, FilterError> {
        let mut lines = Lines {
            inner: text.split('\n').enumerate(),
        };
        let (no, magic) = lines.next_line("header")?;
        if magic != MAGIC {
            return Err(FilterError::Format {
                line: no,
                reason: format!("expected `{MAGIC}`"),
            });
        }
        let (_, target_label) = lines.field("target_label")?;
        let (no, threshold) = lines.field("threshold")?;
        let confidence_threshold: f64 = parse_num(no, "threshold", threshold)?;
        let (no, max) = lines.field("max_responses")?;
        let max_responses: usize = parse_num(no, "max_responses", max)?;
        let (_, source_run_id) = lines.field("source_run_id")?;
        let (no, created) = lines.field("created_at")?;
        let created_at = DateTime::parse_from_rfc3339(created)
            .map_err(|e| FilterError::Format {
                line: no,
                reason: format!("created_at: {e}"),
            })?
            .with_timezone(&Utc);
        let (no, n_ctx) = lines.field("aggregated_context_lines")?;
        let n_ctx: usize = parse_num(no, "aggregated_context_lines", n_ctx)?;
        let mut context = Vec::with_capacity(n_ctx);
        for _ in 0..n_ctx {
            context.push(lines.next_line("aggregated context line")?.1);
        }
        let (no, n_q) = lines.field("questions")?;
        let n_q: usize = parse_num(no, "questions", n_q)?;
        let mut questions = Vec::with_capacity(n_q);
        for i in 0..n_q {
            let (no, line) = lines.next_line("question")?;
            let prefix = format!("{}. ", i + 1);
            let q = line
                .strip_prefix(&prefix)
                .ok_or_else(|| FilterError::Format {
                    line: no,
                    reason: format!("expected question numbered `{prefix}`"),
                })?;
            questions.push(q.to_string());
        }
        match lines.inner.next() {
            Some((_, "")) if lines.inner.next().is_none() => {}
            Some((i, _)) => {
                return Err(FilterError::Format {
                    line: i + 1,
                    reason: "trailing content".into(),
                })
            }
            None => {
                return Err(FilterError::Format {
                    line: 0,
                    reason: "missing final newline".into(),
                })
            }
        }
        Ok(Self {
            criteria: FilterCriteria {
                target_label: target_label.to_string(),
                confidence_threshold,
                max_responses,
            },
            target_label: target_label.to_string(),
            aggregated_context: context.join("\n"),
            targeted_questions: questions,
            source_run_id: source_run_id.to_string(),
            created_at,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), FilterError> {
        let text = self.to_text()?;
        std::fs::write(path, text).map_err(|source| FilterError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, FilterError> {
        let text = std::fs::read_to_string(path).map_err(|source| FilterError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}
