use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Modality;
use crate::filtering::{apply_filters, FilterArtifact, FilterError};
use crate::labels::LabelSet;

/// Questions contributed by one filter artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionGroup {
    pub target_label: String,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    /// Task statement plus the options listing.
    pub user_text: String,
    pub targeted_questions: Vec<QuestionGroup>,
    pub label_set: LabelSet,
    pub response_contract: String,
}

const RESPONSE_CONTRACT: &str = "End your reply with a single JSON object of the form \
{\"label\": \"<one option, spelled exactly as listed>\", \"confidence\": <number between 0 and 1>, \
\"rationale\": \"<one or two sentences>\"}. The confidence is your probability that the chosen \
label is correct.";

const QUESTION_PREAMBLE: &str = "Before choosing a label, answer each of the following questions \
about the image in one short line, then give your final answer.";

impl PromptBundle {
    pub fn has_questions(&self) -> bool {
        self.targeted_questions
            .iter()
            .any(|g| !g.questions.is_empty())
    }

    /// All targeted questions in injection order.
    pub fn questions(&self) -> impl Iterator<Item = &str> {
        self.targeted_questions
            .iter()
            .flat_map(|g| g.questions.iter().map(String::as_str))
    }

    /// The full user message sent to the model.
    pub fn render_user_prompt(&self) -> String {
        let mut out = self.user_text.clone();
        if self.has_questions() {
            out.push_str("\n\n");
            out.push_str(QUESTION_PREAMBLE);
            for group in &self.targeted_questions {
                let _ = write!(out, "\nKey questions for \"{}\":", group.target_label);
                for (i, q) in group.questions.iter().enumerate() {
                    let _ = write!(out, "\n{}. {}", i + 1, q);
                }
            }
        }
        out.push_str("\n\n");
        out.push_str(&self.response_contract);
        out
    }
}

/// Build the classification prompt, injecting the targeted questions of any
/// supplied filter artifacts.
pub fn build_prompt(
    label_set: &LabelSet,
    modality: Modality,
    artifacts: &[FilterArtifact],
) -> Result<PromptBundle, FilterError> {
    let description = modality.description();
    let system_text = format!(
        "You are an expert radiologist reviewing {description} images for a diagnostic \
         classification study. Base your answer only on the image provided."
    );
    let mut user_text = format!(
        "Classify the attached {description} image into exactly one of the following categories.\nOptions:"
    );
    for label in label_set.iter() {
        let _ = write!(user_text, "\n- {label}");
    }
    let bundle = PromptBundle {
        system_text,
        user_text,
        targeted_questions: Vec::new(),
        label_set: label_set.clone(),
        response_contract: RESPONSE_CONTRACT.to_string(),
    };
    if artifacts.is_empty() {
        Ok(bundle)
    } else {
        apply_filters(&bundle, artifacts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn option_lines(text: &str) -> Vec<&str> {
        text.lines().filter_map(|l| l.strip_prefix("- ")).collect()
    }

    #[test]
    fn options_are_exactly_the_label_set() {
        let labels = LabelSet::new(["normal", "covid"]).unwrap();
        let b = build_prompt(&labels, Modality::Xray, &[]).unwrap();
        assert_eq!(option_lines(&b.user_text), ["normal", "covid"]);
        assert!(b.targeted_questions.is_empty());
        let rendered = b.render_user_prompt();
        assert!(rendered.contains("\"label\""));
        assert!(rendered.contains("\"confidence\""));
        assert!(rendered.contains("\"rationale\""));
        assert!(!rendered.contains("Key questions"));
    }

    #[test]
    fn every_label_listed_once() {
        let labels = Modality::Ct.canonical_labels();
        let b = build_prompt(&labels, Modality::Ct, &[]).unwrap();
        let opts = option_lines(&b.user_text);
        for label in labels.iter() {
            assert_eq!(opts.iter().filter(|o| **o == label).count(), 1);
        }
        assert_eq!(opts.len(), labels.len());
    }

    #[test]
    fn deterministic() {
        let labels = Modality::Xray.canonical_labels();
        assert_eq!(
            build_prompt(&labels, Modality::Xray, &[]).unwrap(),
            build_prompt(&labels, Modality::Xray, &[]).unwrap()
        );
    }
}
