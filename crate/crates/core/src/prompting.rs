//! Prompt rendering from versioned template assets.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{NliClass, Statement};
use crate::template;

pub const RDF_TEMPLATE_NAME: &str = "rdf_verification.v1";
pub const NLI_TEMPLATE_NAME: &str = "nli_verification.v1";
pub const NLI_EXAMPLE_TEMPLATE_NAME: &str = "nli_example.v1";

const RDF_TEMPLATE: &str = include_str!("../assets/templates/rdf_verification.v1.txt");
const NLI_TEMPLATE: &str = include_str!("../assets/templates/nli_verification.v1.txt");
const NLI_EXAMPLE_TEMPLATE: &str = include_str!("../assets/templates/nli_example.v1.txt");

const SYSTEM_PROMPT: &str = "You are a helpful assistant. Work only with the text given to you.";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("snippet is empty")]
    EmptySnippet,
    #[error("{0} is empty")]
    EmptyField(&'static str),
    #[error("invalid few-shot examples: {0}")]
    InvalidExamples(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdfPrompt {
    pub statement: Statement,
    pub snippet: String,
}

impl RdfPrompt {
    pub fn new(statement: Statement, snippet: impl Into<String>) -> Result<Self, PromptError> {
        let snippet = snippet.into();
        if snippet.trim().is_empty() {
            return Err(PromptError::EmptySnippet);
        }
        Ok(Self { statement, snippet })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliExample {
    /// Source record identifier, recorded in run manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub premise: String,
    pub hypothesis: String,
    pub label: NliClass,
}

fn body(template: &str) -> &str {
    template.strip_suffix('\n').unwrap_or(template)
}

pub fn system_prompt() -> &'static str {
    SYSTEM_PROMPT
}

pub fn render_rdf_prompt(prompt: &RdfPrompt) -> String {
    let s = &prompt.statement;
    template::render(
        body(RDF_TEMPLATE),
        &[
            ("SUBJECT", &s.subject_label),
            ("PREDICATE", &s.predicate_label),
            ("OBJECT", &s.object_label),
            ("SNIPPET", &prompt.snippet),
        ],
    )
    .expect("bundled RDF template is complete")
}

/// Texts of options a, b and c as worded in the verification template.
pub fn rdf_option_texts() -> [(char, &'static str); 3] {
    let mut out = [('a', ""), ('b', ""), ('c', "")];
    for line in body(RDF_TEMPLATE).lines() {
        for slot in out.iter_mut() {
            if let Some(text) = line.strip_prefix(&format!("{}) ", slot.0)) {
                slot.1 = text;
            }
        }
    }
    out
}

pub fn nli_option_text(class: NliClass) -> String {
    format!("{}) {}", class.option_letter(), class.name())
}

pub fn validate_nli_examples(examples: &[NliExample]) -> Result<(), PromptError> {
    if examples.len() != 3 {
        return Err(PromptError::InvalidExamples(format!("expected 3 examples, got {}", examples.len())));
    }
    for class in NliClass::ALL {
        let n = examples.iter().filter(|e| e.label == class).count();
        if n != 1 {
            return Err(PromptError::InvalidExamples(format!("{n} examples labelled {class}")));
        }
    }
    for e in examples {
        if e.premise.trim().is_empty() || e.hypothesis.trim().is_empty() {
            return Err(PromptError::InvalidExamples("example with empty text".into()));
        }
    }
    Ok(())
}

pub fn render_nli_prompt(premise: &str, hypothesis: &str, examples: &[NliExample]) -> Result<String, PromptError> {
    if premise.trim().is_empty() {
        return Err(PromptError::EmptyField("premise"));
    }
    if hypothesis.trim().is_empty() {
        return Err(PromptError::EmptyField("hypothesis"));
    }
    validate_nli_examples(examples)?;
    let rendered: Vec<String> = examples
        .iter()
        .map(|e| {
            template::render(
                body(NLI_EXAMPLE_TEMPLATE),
                &[("PREMISE", &e.premise), ("HYPOTHESIS", &e.hypothesis), ("ANSWER", &nli_option_text(e.label))],
            )
            .expect("bundled example template is complete")
        })
        .collect();
    Ok(template::render(
        body(NLI_TEMPLATE),
        &[("EXAMPLES", &rendered.join("\n")), ("PREMISE", premise), ("HYPOTHESIS", hypothesis)],
    )
    .expect("bundled NLI template is complete"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateInfo {
    pub name: String,
    pub sha256: String,
}

pub fn template_manifest() -> Vec<TemplateInfo> {
    [
        (RDF_TEMPLATE_NAME, RDF_TEMPLATE),
        (NLI_TEMPLATE_NAME, NLI_TEMPLATE),
        (NLI_EXAMPLE_TEMPLATE_NAME, NLI_EXAMPLE_TEMPLATE),
        ("system_prompt", SYSTEM_PROMPT),
    ]
    .into_iter()
    .map(|(name, text)| TemplateInfo { name: name.into(), sha256: hex::encode(Sha256::digest(text.as_bytes())) })
    .collect()
}
