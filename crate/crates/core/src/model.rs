//! Core domain types: statements, verdicts, decisions and evidence traces.
//!
//! A [`Statement`] is a label-level subject/predicate/object triple. The LLM
//! never decides whether a statement is true; it only compares a statement
//! with a snippet and answers with one of three options, captured here as a
//! [`Verdict`]. Downstream code turns verdicts into a [`BinaryDecision`]
//! according to a [`DecisionMode`].

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("statement {field} label is empty")]
    EmptyLabel { field: &'static str },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

/// A subject/predicate/object triple with optional knowledge-graph identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStatement")]
pub struct Statement {
    pub subject_label: String,
    pub predicate_label: String,
    pub object_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

#[derive(Deserialize)]
struct RawStatement {
    subject_label: String,
    predicate_label: String,
    object_label: String,
    #[serde(default)]
    subject_id: Option<String>,
    #[serde(default)]
    predicate_id: Option<String>,
    #[serde(default)]
    object_id: Option<String>,
    #[serde(default)]
    domain_tag: Option<String>,
}

impl TryFrom<RawStatement> for Statement {
    type Error = ModelError;

    fn try_from(raw: RawStatement) -> Result<Self, Self::Error> {
        let mut statement = Statement::new(raw.subject_label, raw.predicate_label, raw.object_label)?;
        statement.subject_id = raw.subject_id;
        statement.predicate_id = raw.predicate_id;
        statement.object_id = raw.object_id;
        statement.domain_tag = raw.domain_tag;
        Ok(statement)
    }
}

impl Statement {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let statement = Self {
            subject_label: subject.into(),
            predicate_label: predicate.into(),
            object_label: object.into(),
            subject_id: None,
            predicate_id: None,
            object_id: None,
            domain_tag: None,
        };
        statement.validate()?;
        Ok(statement)
    }

    pub fn with_ids(
        mut self,
        subject_id: Option<String>,
        predicate_id: Option<String>,
        object_id: Option<String>,
    ) -> Self {
        self.subject_id = subject_id.filter(|s| !s.trim().is_empty());
        self.predicate_id = predicate_id.filter(|s| !s.trim().is_empty());
        self.object_id = object_id.filter(|s| !s.trim().is_empty());
        self
    }

    pub fn with_domain_tag(mut self, tag: impl Into<String>) -> Self {
        self.domain_tag = Some(tag.into());
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [
            ("subject", &self.subject_label),
            ("predicate", &self.predicate_label),
            ("object", &self.object_label),
        ] {
            if value.trim().is_empty() {
                return Err(ModelError::EmptyLabel { field });
            }
        }
        Ok(())
    }

    /// Parses one tab-separated record: `subject TAB predicate TAB object`
    /// optionally followed by `subject_id TAB predicate_id TAB object_id`
    /// (empty id columns are allowed).
    pub fn from_tsv_line(line: &str, line_no: usize) -> Result<Self, ModelError> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if fields.len() < 3 || fields.len() > 6 {
            return Err(ModelError::MalformedLine {
                line: line_no,
                reason: format!("expected 3 to 6 tab-separated fields, found {}", fields.len()),
            });
        }
        let statement = Statement::new(fields[0], fields[1], fields[2]).map_err(|e| {
            ModelError::MalformedLine { line: line_no, reason: e.to_string() }
        })?;
        let id = |i: usize| fields.get(i).map(|s| s.trim().to_string());
        Ok(statement.with_ids(id(3), id(4), id(5)))
    }

    pub fn to_tsv_line(&self) -> String {
        let mut line = format!("{}\t{}\t{}", self.subject_label, self.predicate_label, self.object_label);
        if self.subject_id.is_some() || self.predicate_id.is_some() || self.object_id.is_some() {
            for id in [&self.subject_id, &self.predicate_id, &self.object_id] {
                line.push('\t');
                line.push_str(id.as_deref().unwrap_or(""));
            }
        }
        line
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> <{}>", self.subject_label, self.predicate_label, self.object_label)
    }
}

/// Parses a statements file in the line-oriented format. Blank lines and
/// lines starting with `#` are ignored; line numbers in errors are 1-based.
pub fn parse_statements_tsv(text: &str) -> Result<Vec<Statement>, ModelError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty() && !line.trim_start().starts_with('#'))
        .map(|(idx, line)| Statement::from_tsv_line(line, idx + 1))
        .collect()
}

/// The option chosen by the LLM for the three-option verification prompt.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// Option a: the snippet contains direct proof.
    DirectProof,
    /// Option b: the snippet contains some indications.
    Indication,
    /// Option c: the statement cannot be inferred.
    NoSupport,
    /// No option could be read from the response.
    Unparseable { raw: String },
}

impl Verdict {
    pub fn code(&self) -> &'static str {
        match self {
            Verdict::DirectProof => "directProof",
            Verdict::Indication => "indication",
            Verdict::NoSupport => "noSupport",
            Verdict::Unparseable { .. } => "unparseable",
        }
    }

    pub fn option_letter(&self) -> Option<char> {
        match self {
            Verdict::DirectProof => Some('a'),
            Verdict::Indication => Some('b'),
            Verdict::NoSupport => Some('c'),
            Verdict::Unparseable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryDecision {
    Supported,
    NotSupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionMode {
    /// Only option a counts as support.
    #[default]
    FavorPrecision,
    /// Options a and b count as support.
    FavorRecall,
}

pub fn verdict_to_binary(verdict: &Verdict, mode: DecisionMode) -> BinaryDecision {
    match (verdict, mode) {
        (Verdict::DirectProof, _) => BinaryDecision::Supported,
        (Verdict::Indication, DecisionMode::FavorRecall) => BinaryDecision::Supported,
        _ => BinaryDecision::NotSupported,
    }
}

/// Collapses runs of whitespace and trims.
pub fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Builds the web-search query: the three labels joined by single spaces,
/// followed by the `-wikipedia` exclusion operator.
pub fn statement_to_search_query(statement: &Statement) -> String {
    format!(
        "{} {} {} -wikipedia",
        normalize_label(&statement.subject_label),
        normalize_label(&statement.predicate_label),
        normalize_label(&statement.object_label)
    )
}

/// The three NLI classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliClass {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliClass {
    pub const ALL: [NliClass; 3] = [NliClass::Entailment, NliClass::Neutral, NliClass::Contradiction];

    pub fn index(self) -> usize {
        match self {
            NliClass::Entailment => 0,
            NliClass::Neutral => 1,
            NliClass::Contradiction => 2,
        }
    }

    pub fn option_letter(self) -> char {
        match self {
            NliClass::Entailment => 'a',
            NliClass::Neutral => 'b',
            NliClass::Contradiction => 'c',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NliClass::Entailment => "entailment",
            NliClass::Neutral => "neutral",
            NliClass::Contradiction => "contradiction",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "entailment" => Some(NliClass::Entailment),
            "neutral" => Some(NliClass::Neutral),
            "contradiction" => Some(NliClass::Contradiction),
            _ => None,
        }
    }
}

impl fmt::Display for NliClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parsed NLI answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Class(NliClass),
    Unparseable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalSource {
    Direct,
    WebArchive,
}

impl RetrievalSource {
    pub fn code(self) -> &'static str {
        match self {
            RetrievalSource::Direct => "direct",
            RetrievalSource::WebArchive => "webArchive",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "direct" => Some(RetrievalSource::Direct),
            "webArchive" => Some(RetrievalSource::WebArchive),
            _ => None,
        }
    }
}

/// The record that links a verified statement to the paragraph and the LLM
/// justification that confirmed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTrace {
    pub statement: Statement,
    pub document_url: String,
    pub retrieval_source: RetrievalSource,
    /// Snapshot the paragraph was read from, for archived documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive_url: Option<String>,
    /// 1-based position among the document's valid paragraphs.
    pub paragraph_index: usize,
    pub paragraph_text: String,
    pub verdict: Verdict,
    pub justification: String,
    pub llm_model: String,
    pub timestamp: DateTime<Utc>,
    pub duration_ms: u64,
}
