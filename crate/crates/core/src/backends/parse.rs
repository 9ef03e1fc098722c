//! Response parsing.
//!
//! Strict mode looks for a JSON object with a `label` naming a member of the
//! label set (the last such object wins, since the contract asks for it at the
//! end of the reply). Fallback mode searches the normalized text for label
//! names, longest first with word boundaries, and for a confidence written as
//! `NN%`, `NN percent` or `0.NN`, preferring text after the word
//! "confidence". Percentages are divided by 100.

use std::sync::LazyLock;

use regex::Regex;
use serde_json::Value;

use super::Prediction;
use crate::labels::{normalize, LabelSet};

static CONFIDENCE_PATTERN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d{1,3}(?:\.\d+)?)\s*(?:%|percent\b)|\b(0\.\d+|1\.0+)\b")
        .expect("valid confidence regex")
});

/// Total: every input maps to `(label, confidence)` or `(Unparsed, None)`.
pub fn parse_response(full_response: &str, label_set: &LabelSet) -> (Prediction, Option<f64>) {
    if let Some((label, confidence)) = parse_structured(full_response, label_set) {
        return (Prediction::Label(label), confidence);
    }
    match find_label(full_response, label_set) {
        Some(label) => (
            Prediction::Label(label.to_string()),
            find_confidence(full_response),
        ),
        None => (Prediction::Unparsed, None),
    }
}

fn parse_structured(text: &str, label_set: &LabelSet) -> Option<(String, Option<f64>)> {
    let mut found = None;
    for (start, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(map))) = stream.next() else {
            continue;
        };
        let Some(label) = map
            .get("label")
            .and_then(Value::as_str)
            .and_then(|l| label_set.resolve(l))
        else {
            continue;
        };
        let confidence = match map.get("confidence") {
            Some(Value::Number(n)) => n.as_f64().and_then(scale_confidence),
            Some(Value::String(s)) => find_confidence(s)
                .or_else(|| s.trim().parse::<f64>().ok().and_then(scale_confidence)),
            _ => None,
        };
        found = Some((label.to_string(), confidence));
    }
    found
}

/// Values in [0, 1] are probabilities; values in (1, 100] are percentages.
fn scale_confidence(x: f64) -> Option<f64> {
    if (0.0..=1.0).contains(&x) {
        Some(x)
    } else if x > 1.0 && x <= 100.0 {
        Some(x / 100.0)
    } else {
        None
    }
}

fn is_boundary(c: Option<char>) -> bool {
    c.is_none_or(|c| !c.is_alphanumeric())
}

fn find_label<'a>(text: &str, label_set: &'a LabelSet) -> Option<&'a str> {
    let haystack = normalize(text);
    let mut order: Vec<usize> = (0..label_set.len()).collect();
    let normalized = label_set.normalized();
    order.sort_by(|&a, &b| {
        normalized[b]
            .len()
            .cmp(&normalized[a].len())
            .then(a.cmp(&b))
    });
    order.into_iter().find_map(|idx| {
        let needle = &normalized[idx];
        let hit = haystack.match_indices(needle.as_str()).any(|(pos, _)| {
            let before = haystack[..pos].chars().next_back();
            let after = haystack[pos + needle.len()..].chars().next();
            is_boundary(before) && is_boundary(after)
        });
        hit.then(|| label_set.get(idx).expect("index in range"))
    })
}

fn first_confidence_in(text: &str) -> Option<f64> {
    CONFIDENCE_PATTERN.captures_iter(text).find_map(|caps| {
        if let Some(pct) = caps.get(1) {
            let v: f64 = pct.as_str().parse().ok()?;
            (v <= 100.0).then_some(v / 100.0)
        } else {
            caps.get(2)?
                .as_str()
                .parse::<f64>()
                .ok()
                .and_then(scale_confidence)
        }
    })
}

fn find_confidence(text: &str) -> Option<f64> {
    let lower = text.to_lowercase();
    if lower.len() == text.len() {
        if let Some(pos) = lower.rfind("confidence") {
            if let Some(c) = first_confidence_in(&text[pos..]) {
                return Some(c);
            }
        }
    }
    first_confidence_in(text)
}
