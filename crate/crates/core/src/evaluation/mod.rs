//! Confusion accounting, metrics, sentence-level reconciliation and the
//! evaluation runs over the benchmark datasets.

pub mod metrics;
pub mod nli;
pub mod reconcile;
pub mod runner;
pub mod tables;

use thiserror::Error;

use crate::llm::LlmError;

pub use metrics::{compute_metrics, micro_average, ConfusionCounts, Fraction, Metrics};
pub use nli::{tally_nli, NliConfusion};
pub use reconcile::{reconcile_loose, reconcile_strict, split_sentences, EntryJudgment, Reconciliation, SentenceClassifier};
pub use runner::{evaluate_baseline, evaluate_biored, evaluate_snli, BaselineEvaluation, BioRedEvaluation, SnliEvaluation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvaluationError {
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("classifier: {0}")]
    Classifier(String),
    #[error(transparent)]
    Llm(LlmError),
}
