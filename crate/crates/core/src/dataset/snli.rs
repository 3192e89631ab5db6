use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::model::NliClass;
use crate::prompting::NliExample;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnliRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub premise: String,
    pub hypothesis: String,
    pub gold: NliClass,
}

#[derive(Deserialize)]
struct RawRecord {
    gold_label: String,
    sentence1: String,
    sentence2: String,
    #[serde(default, rename = "pairID")]
    pair_id: Option<String>,
}

/// Parses SNLI JSON-lines. Records without annotator consensus (gold label
/// `-`) are dropped.
pub fn parse_snli(text: &str) -> Result<Vec<SnliRecord>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| DatasetError::MalformedInput {
            doc_id: String::new(),
            reason: format!("line {}: {e}", idx + 1),
        })?;
        let Some(gold) = NliClass::from_name(&raw.gold_label) else {
            if raw.gold_label.trim() == "-" {
                continue;
            }
            return Err(DatasetError::MalformedInput {
                doc_id: raw.pair_id.unwrap_or_default(),
                reason: format!("line {}: unknown gold label {:?}", idx + 1, raw.gold_label),
            });
        };
        out.push(SnliRecord { pair_id: raw.pair_id, premise: raw.sentence1, hypothesis: raw.sentence2, gold });
    }
    Ok(out)
}

pub fn load_snli(path: &Path) -> Result<Vec<SnliRecord>, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_snli(&text)
}

/// Draws `n` records without replacement in a seed-determined order.
pub fn sample_snli_test(records: &[SnliRecord], n: usize, seed: u64) -> Result<Vec<SnliRecord>, DatasetError> {
    if n > records.len() {
        return Err(DatasetError::InsufficientRecords {
            reason: format!("requested {n} records, only {} have a gold label", records.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut rng);
    Ok(order.into_iter().take(n).map(|i| records[i].clone()).collect())
}

/// One few-shot example per class, in class order.
pub fn pick_nli_examples(records: &[SnliRecord], seed: u64) -> Result<Vec<NliExample>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NliClass::ALL
        .into_iter()
        .map(|class| {
            let pool: Vec<&SnliRecord> = records.iter().filter(|r| r.gold == class).collect();
            if pool.is_empty() {
                return Err(DatasetError::InsufficientRecords { reason: format!("no {class} record to use as an example") });
            }
            let pick = pool[rng.random_range(0..pool.len())];
            Ok(NliExample {
                id: pick.pair_id.clone(),
                premise: pick.premise.clone(),
                hypothesis: pick.hypothesis.clone(),
                label: class,
            })
        })
        .collect()
}
