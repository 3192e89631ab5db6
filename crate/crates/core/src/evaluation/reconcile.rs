use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::model::NliClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryJudgment {
    Entailment,
    NotEntailment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconciliation {
    Loose,
    Strict,
}

impl Reconciliation {
    pub fn apply(self, labels: &[NliClass]) -> Result<EntryJudgment, EvaluationError> {
        match self {
            Reconciliation::Loose => reconcile_loose(labels),
            Reconciliation::Strict => reconcile_strict(labels),
        }
    }
}

fn judged(entails: bool) -> EntryJudgment {
    if entails {
        EntryJudgment::Entailment
    } else {
        EntryJudgment::NotEntailment
    }
}

/// Entailment when any sentence entails, contradictions notwithstanding.
pub fn reconcile_loose(labels: &[NliClass]) -> Result<EntryJudgment, EvaluationError> {
    if labels.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    Ok(judged(labels.contains(&NliClass::Entailment)))
}

/// Entailment when some sentence entails and none contradicts.
pub fn reconcile_strict(labels: &[NliClass]) -> Result<EntryJudgment, EvaluationError> {
    if labels.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    Ok(judged(labels.contains(&NliClass::Entailment) && !labels.contains(&NliClass::Contradiction)))
}

/// A sentence-pair classifier such as an NLI cross-encoder.
pub trait SentenceClassifier: Send + Sync {
    fn name(&self) -> &str;
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliClass, EvaluationError>;
}

static BOUNDARY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?]+[\)\]'\x22]*\s+").expect("static regex"));

/// Abbreviations that end in a period without ending a sentence.
const ABBREVIATIONS: [&str; 12] = ["e.g.", "i.e.", "et al.", "vs.", "Dr.", "Fig.", "Figs.", "approx.", "cf.", "No.", "ca.", "resp."];

/// Splits prose into sentences at terminal punctuation followed by
/// whitespace and an uppercase letter or digit.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    for m in BOUNDARY.find_iter(text) {
        let head = &text[start..m.end()];
        let next = text[m.end()..].chars().next();
        let starts_sentence = next.is_some_and(|c| c.is_uppercase() || c.is_ascii_digit());
        let trimmed = head.trim_end();
        let abbreviated = ABBREVIATIONS.iter().any(|a| trimmed.ends_with(a));
        if starts_sentence && !abbreviated {
            out.push(trimmed.trim().to_string());
            start = m.end();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out.retain(|s| !s.is_empty());
    out
}
