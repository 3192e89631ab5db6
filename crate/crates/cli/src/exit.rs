//! Failure classes and their process exit codes.

use kgtrace::dataset::DatasetError;
use kgtrace::evaluation::EvaluationError;
use kgtrace::http::TransportError;
use kgtrace::llm::LlmError;
use kgtrace::report::ReportError;
use kgtrace::retrieval::fetch::FetchError;
use kgtrace::retrieval::search::SearchError;
use kgtrace::verifier::VerifyError;
use kgtrace::wikidata::WikidataError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_ENTITY: i32 = 4;
pub const EXIT_FIXTURE_MISSING: i32 = 5;
pub const EXIT_NETWORK: i32 = 6;
pub const EXIT_LLM: i32 = 7;
pub const EXIT_REPORT: i32 = 8;
pub const EXIT_DATASET: i32 = 9;
pub const EXIT_EVALUATION: i32 = 10;
pub const EXIT_IO: i32 = 11;
pub const EXIT_INTERRUPTED: i32 = 130;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Entity(String),
    #[error("replay fixture missing: {0}")]
    FixtureMissing(String),
    #[error("network failure: {0}")]
    Network(String),
    #[error("LLM failure: {0}")]
    Llm(String),
    #[error("report failure: {0}")]
    Report(#[from] ReportError),
    #[error("dataset failure: {0}")]
    Dataset(String),
    #[error("evaluation failure: {0}")]
    Evaluation(String),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Entity(_) => EXIT_ENTITY,
            CliError::FixtureMissing(_) => EXIT_FIXTURE_MISSING,
            CliError::Network(_) => EXIT_NETWORK,
            CliError::Llm(_) => EXIT_LLM,
            CliError::Report(_) => EXIT_REPORT,
            CliError::Dataset(_) => EXIT_DATASET,
            CliError::Evaluation(_) => EXIT_EVALUATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::FixtureMissing { .. } => CliError::FixtureMissing(e.to_string()),
            TransportError::NetworkDisabled => CliError::FixtureMissing(e.to_string()),
            TransportError::Store(_) => CliError::Io(e.to_string()),
            other => CliError::Network(other.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::FixtureMissing { .. } => CliError::FixtureMissing(e.to_string()),
            LlmError::Transport(t) => t.into(),
            LlmError::Misconfigured(m) | LlmError::InvalidParams(m) => CliError::Config(m),
            other => CliError::Llm(other.to_string()),
        }
    }
}

impl From<WikidataError> for CliError {
    fn from(e: WikidataError) -> Self {
        match e {
            WikidataError::UnknownEntity(_) | WikidataError::NoSitelink(_) => CliError::Entity(e.to_string()),
            WikidataError::Transport(t) => t.into(),
            other => CliError::Network(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::FixtureMissing { .. } => CliError::FixtureMissing(e.to_string()),
            SearchError::Transport(t) => t.into(),
            SearchError::Misconfigured(m) => CliError::Config(m),
            other => CliError::Network(other.to_string()),
        }
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::Transport(t) => t.into(),
            other => CliError::Network(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Search(s) => s.into(),
            VerifyError::Wikidata(w) => w.into(),
            VerifyError::Llm(l) => l.into(),
            VerifyError::Fetch(f) => f.into(),
            VerifyError::NoSitelink(_) | VerifyError::MissingSubject(_) => CliError::Entity(e.to_string()),
            VerifyError::Misconfigured(m) => CliError::Config(m),
            VerifyError::NoDocumentsRetrievable(_) => CliError::Network(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Input(e.to_string()),
            other => CliError::Dataset(other.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Llm(l) => l.into(),
            EvaluationError::EmptyInput => CliError::Input("dataset is empty".into()),
            other => CliError::Evaluation(other.to_string()),
        }
    }
}
