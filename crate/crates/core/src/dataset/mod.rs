//! Benchmark datasets: statement verification instances built from BioRED
//! and sentence pairs sampled from SNLI.

pub mod biored;
pub mod snli;

use thiserror::Error;

pub use biored::{
    build_manifest, extract_positives, generate_negatives, load_biored, BioRedDocument, DatasetManifest,
    GroundTruth, LabeledInstance, NegativeSet, NoCandidate, Origin, PoolScope, RelationType,
};
pub use snli::{load_snli, pick_nli_examples, sample_snli_test, SnliRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("malformed input (document {doc_id:?}): {reason}")]
    MalformedInput { doc_id: String, reason: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("insufficient records: {reason}")]
    InsufficientRecords { reason: String },
}
