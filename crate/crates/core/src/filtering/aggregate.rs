use std::sync::LazyLock;

use chrono::Utc;
use regex::Regex;

use super::{FilterArtifact, FilterCriteria, FilterError};
use crate::backends::{Backend, BackendConfig};

/// Placed between consecutive response texts in the aggregation prompt.
pub const CONTEXT_SEPARATOR: &str = "\n---\n";

const AGGREGATOR_SYSTEM: &str = "You are a senior radiologist distilling the reasoning behind \
correct image classifications into a reusable checklist.";

static LIST_ITEM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:\d+\s*[.)]|[-*•])\s+(.+?)\s*$").expect("valid list regex")
});

/// The user message for the aggregation call. Contexts appear verbatim,
/// joined by [`CONTEXT_SEPARATOR`].
pub fn aggregation_prompt(contexts: &[String], target_label: &str) -> String {
    format!(
        "Below are {n} responses in which a model correctly classified an image as \"{target_label}\" \
with high confidence. Responses are separated by lines containing only ---.\n\n\
{body}\n\n\
From these responses:\n\
1. Under a line reading SUMMARY:, write a consolidated description of the image features that \
drove the \"{target_label}\" decisions.\n\
2. Under a line reading QUESTIONS:, write a numbered list of targeted questions, each answerable \
with yes or no from a single image, whose answers are critical for deciding whether an image \
shows \"{target_label}\". Put one question per line.",
        n = contexts.len(),
        body = contexts.join(CONTEXT_SEPARATOR),
    )
}

enum Section {
    Preamble,
    Summary,
    Questions,
}

/// Heading keyword and any inline text after its colon.
fn heading(line: &str) -> Option<(&'static str, &str)> {
    let bare = line.trim().trim_start_matches(['#', '*', ' ']);
    let (word, rest) = bare.split_once(':')?;
    let word = word
        .trim()
        .trim_end_matches('*')
        .trim()
        .to_ascii_lowercase();
    let rest = rest.trim().trim_start_matches('*').trim();
    match word.as_str() {
        "summary" => Some(("summary", rest)),
        "questions" | "targeted questions" => Some(("questions", rest)),
        _ => None,
    }
}

/// Split an aggregator reply into `(summary, questions)`.
///
/// Questions are numbered (`1.`, `2)`) or bulleted (`-`, `*`) lines after a
/// `QUESTIONS:` heading, or anywhere when no heading is present; they are
/// trimmed and deduplicated keeping the first occurrence.
pub fn parse_aggregator_reply(reply: &str) -> (String, Vec<String>) {
    let has_question_heading = reply
        .lines()
        .any(|l| matches!(heading(l), Some(("questions", _))));
    let mut section = Section::Preamble;
    let mut summary: Vec<&str> = Vec::new();
    let mut questions: Vec<String> = Vec::new();
    for line in reply.lines() {
        if let Some((kind, rest)) = heading(line) {
            section = if kind == "summary" {
                Section::Summary
            } else {
                Section::Questions
            };
            if kind == "summary" && !rest.is_empty() {
                summary.push(rest);
            }
            continue;
        }
        let item = LIST_ITEM
            .captures(line)
            .map(|c| c.get(1).expect("group").as_str());
        let in_question_zone = matches!(section, Section::Questions) || !has_question_heading;
        match (item, in_question_zone) {
            (Some(q), true) => {
                let q = q.trim().trim_matches('*').trim().to_string();
                if !q.is_empty() && !questions.contains(&q) {
                    questions.push(q);
                }
            }
            _ if matches!(section, Section::Questions) => {}
            _ => summary.push(line),
        }
    }
    let summary = summary.join("\n").trim().to_string();
    (summary, questions)
}

/// One aggregation call over the filtered contexts, parsed into an artifact.
pub async fn formulate_questions(
    contexts: &[String],
    aggregator: &Backend,
    criteria: &FilterCriteria,
    source_run_id: &str,
) -> Result<FilterArtifact, FilterError> {
    if contexts.is_empty() {
        return Err(FilterError::EmptyContexts);
    }
    if !aggregator.is_text_capable() {
        return Err(FilterError::NotTextCapable(
            aggregator.config().backend_id.clone(),
        ));
    }
    let prompt = aggregation_prompt(contexts, &criteria.target_label);
    let reply = aggregator
        .complete_text(AGGREGATOR_SYSTEM, &prompt, &criteria.target_label)
        .await
        .map_err(|e| FilterError::Aggregation(e.to_string()))?;
    let (aggregated_context, targeted_questions) = parse_aggregator_reply(&reply);
    if targeted_questions.is_empty() {
        return Err(FilterError::NoQuestions {
            excerpt: reply.chars().take(200).collect(),
        });
    }
    Ok(FilterArtifact {
        target_label: criteria.target_label.clone(),
        aggregated_context,
        targeted_questions,
        source_run_id: source_run_id.to_string(),
        criteria: criteria.clone(),
        created_at: Utc::now(),
    })
}

pub async fn formulate_questions_with_config(
    contexts: &[String],
    aggregator: &BackendConfig,
    criteria: &FilterCriteria,
    source_run_id: &str,
) -> Result<FilterArtifact, FilterError> {
    if contexts.is_empty() {
        return Err(FilterError::EmptyContexts);
    }
    let backend = Backend::from_config(aggregator)?;
    formulate_questions(contexts, &backend, criteria, source_run_id).await
}
