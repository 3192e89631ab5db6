use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::model::{BinaryDecision, Statement};

/// Concept types in the order used to normalize unordered pairs.
pub const CONCEPT_ORDER: [&str; 6] = [
    "ChemicalEntity",
    "SequenceVariant",
    "GeneOrGeneProduct",
    "DiseaseOrPhenotypicFeature",
    "OrganismTaxon",
    "CellLine",
];

/// Pair left out of the dataset because it occurs too rarely.
pub const EXCLUDED_PAIR: (&str, &str) = ("ChemicalEntity", "SequenceVariant");

pub const SCHEMA_VERSION: &str = "biored-verify.v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub concept_type: String,
    /// In order of first mention.
    pub surface_forms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub head_id: String,
    pub tail_id: String,
    pub relation_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioRedDocument {
    pub doc_id: String,
    pub text: String,
    pub entities: Vec<Entity>,
    pub relations: Vec<Relation>,
}

impl BioRedDocument {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationType {
    #[serde(rename = "Positive_Correlation")]
    PositiveCorrelation,
    #[serde(rename = "Negative_Correlation")]
    NegativeCorrelation,
}

impl RelationType {
    pub const ALL: [RelationType; 2] = [RelationType::PositiveCorrelation, RelationType::NegativeCorrelation];

    pub fn label(self) -> &'static str {
        match self {
            RelationType::PositiveCorrelation => "Positive_Correlation",
            RelationType::NegativeCorrelation => "Negative_Correlation",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.label() == label)
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    GroundTruth,
    Corrupted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub doc_id: String,
    /// Position of the source relation within its document.
    pub relation_index: usize,
    pub statement: Statement,
    pub grounding_text: String,
    pub gold: BinaryDecision,
    pub concept_pair: (String, String),
    pub relation_type: RelationType,
    pub origin: Origin,
}

impl LabeledInstance {
    pub fn is_consistent(&self) -> bool {
        matches!(
            (self.origin, self.gold),
            (Origin::GroundTruth, BinaryDecision::Supported) | (Origin::Corrupted, BinaryDecision::NotSupported)
        )
    }
}

fn concept_rank(concept: &str) -> usize {
    CONCEPT_ORDER.iter().position(|c| *c == concept).unwrap_or(CONCEPT_ORDER.len())
}

pub fn normalize_pair(a: &str, b: &str) -> (String, String) {
    if (concept_rank(a), a) <= (concept_rank(b), b) {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn is_excluded_pair(pair: &(String, String)) -> bool {
    let excluded = normalize_pair(EXCLUDED_PAIR.0, EXCLUDED_PAIR.1);
    *pair == excluded
}

// BioC JSON as distributed.

#[derive(Deserialize)]
struct BiocCollection {
    #[serde(default)]
    documents: Vec<BiocDocument>,
}

#[derive(Deserialize)]
struct BiocDocument {
    id: String,
    #[serde(default)]
    passages: Vec<BiocPassage>,
    #[serde(default)]
    relations: Vec<BiocRelation>,
}

#[derive(Deserialize)]
struct BiocPassage {
    #[serde(default)]
    offset: i64,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    annotations: Vec<BiocAnnotation>,
}

#[derive(Deserialize)]
struct BiocAnnotation {
    #[serde(default)]
    infons: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Deserialize)]
struct BiocRelation {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    infons: BTreeMap<String, serde_json::Value>,
}

fn infon<'a>(infons: &'a BTreeMap<String, serde_json::Value>, key: &str) -> Option<&'a str> {
    infons
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(key))
        .and_then(|(_, v)| v.as_str())
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn convert(doc: BiocDocument) -> Result<BioRedDocument, DatasetError> {
    let malformed = |reason: String| DatasetError::MalformedInput { doc_id: doc.id.clone(), reason };
    let mut passages: Vec<&BiocPassage> = doc.passages.iter().collect();
    passages.sort_by_key(|p| p.offset);
    let text = passages
        .iter()
        .filter_map(|p| p.text.as_deref())
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ");

    let mut entities: Vec<Entity> = Vec::new();
    for annotation in passages.iter().flat_map(|p| &p.annotations) {
        let Some(concept) = infon(&annotation.infons, "type") else {
            return Err(malformed("annotation without a concept type".into()));
        };
        let Some(identifier) = infon(&annotation.infons, "identifier") else { continue };
        let surface = annotation.text.as_deref().map(crate::model::normalize_label).unwrap_or_default();
        // a mention may be linked to several identifiers
        for id in identifier.split(',').map(str::trim).filter(|s| !s.is_empty() && *s != "-") {
            match entities.iter_mut().find(|e| e.id == id) {
                Some(entity) => {
                    if entity.concept_type != concept {
                        log::warn!("{}: entity {id} typed as both {} and {concept}", doc.id, entity.concept_type);
                    }
                    if !surface.is_empty() && !entity.surface_forms.contains(&surface) {
                        entity.surface_forms.push(surface.clone());
                    }
                }
                None => entities.push(Entity {
                    id: id.to_string(),
                    concept_type: concept.to_string(),
                    surface_forms: if surface.is_empty() { Vec::new() } else { vec![surface.clone()] },
                }),
            }
        }
    }

    let mut relations = Vec::with_capacity(doc.relations.len());
    for (idx, rel) in doc.relations.iter().enumerate() {
        let name = rel.id.clone().unwrap_or_else(|| format!("#{idx}"));
        let endpoint = |key: &str| -> Result<String, DatasetError> {
            let id = infon(&rel.infons, key).ok_or_else(|| malformed(format!("relation {name} has no {key}")))?;
            if !entities.iter().any(|e| e.id == id) {
                return Err(malformed(format!("relation {name} names missing entity {id}")));
            }
            Ok(id.to_string())
        };
        let head_id = endpoint("entity1")?;
        let tail_id = endpoint("entity2")?;
        let relation_type = infon(&rel.infons, "type")
            .ok_or_else(|| malformed(format!("relation {name} has no type")))?
            .to_string();
        relations.push(Relation { head_id, tail_id, relation_type });
    }
    Ok(BioRedDocument { doc_id: doc.id, text, entities, relations })
}

fn bioc_files(path: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let io = |e: std::io::Error| DatasetError::Io { path: path.display().to_string(), reason: e.to_string() };
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(io)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("json")))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads and merges every BioC JSON file at `path` (a directory or a single
/// file), sorted by document id.
pub fn load_biored(path: &Path) -> Result<Vec<BioRedDocument>, DatasetError> {
    let files = bioc_files(path)?;
    if files.is_empty() {
        return Err(DatasetError::MalformedInput {
            doc_id: String::new(),
            reason: format!("no BioC JSON files in {}", path.display()),
        });
    }
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for file in files {
        let text = std::fs::read_to_string(&file)
            .map_err(|e| DatasetError::Io { path: file.display().to_string(), reason: e.to_string() })?;
        let collection: BiocCollection = serde_json::from_str(&text).map_err(|e| DatasetError::MalformedInput {
            doc_id: String::new(),
            reason: format!("{}: {e}", file.display()),
        })?;
        for doc in collection.documents {
            let doc = convert(doc)?;
            if !seen.insert(doc.doc_id.clone()) {
                return Err(DatasetError::MalformedInput {
                    doc_id: doc.doc_id,
                    reason: format!("duplicate document in {}", file.display()),
                });
            }
            docs.push(doc);
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}

fn surface(entity: &Entity) -> &str {
    entity.surface_forms.first().map(String::as_str).unwrap_or(&entity.id)
}

/// One ground-truth instance per relation of a chosen type, skipping the
/// excluded concept pair. Output order is (doc id, relation index).
pub fn extract_positives(docs: &[BioRedDocument]) -> Vec<LabeledInstance> {
    let mut sorted: Vec<&BioRedDocument> = docs.iter().collect();
    sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut out = Vec::new();
    for doc in sorted {
        for (idx, rel) in doc.relations.iter().enumerate() {
            let Some(relation_type) = RelationType::from_label(&rel.relation_type) else { continue };
            let (Some(head), Some(tail)) = (doc.entity(&rel.head_id), doc.entity(&rel.tail_id)) else { continue };
            let concept_pair = normalize_pair(&head.concept_type, &tail.concept_type);
            if is_excluded_pair(&concept_pair) {
                continue;
            }
            let statement = Statement::new(surface(head), relation_type.label(), surface(tail))
                .expect("entity surface forms are never empty")
                .with_ids(Some(head.id.clone()), None, Some(tail.id.clone()));
            out.push(LabeledInstance {
                doc_id: doc.doc_id.clone(),
                relation_index: idx,
                statement,
                grounding_text: doc.text.clone(),
                gold: BinaryDecision::Supported,
                concept_pair,
                relation_type,
                origin: Origin::GroundTruth,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolScope {
    /// Any entity of the right type anywhere in the corpus.
    #[default]
    Corpus,
    SameDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    pub label: String,
}

/// Ground-truth triples and replacement candidates derived from a corpus.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    /// (predicate, unordered entity pair) over every relation in the corpus.
    triples: HashSet<(String, String, String)>,
    corpus_pool: BTreeMap<String, Vec<PoolEntry>>,
    doc_pools: BTreeMap<String, BTreeMap<String, Vec<PoolEntry>>>,
}

fn undirected(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl GroundTruth {
    pub fn from_documents(docs: &[BioRedDocument]) -> Self {
        let mut sorted: Vec<&BioRedDocument> = docs.iter().collect();
        sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut truth = GroundTruth::default();
        let mut corpus: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for doc in sorted {
            for rel in &doc.relations {
                let (a, b) = undirected(&rel.head_id, &rel.tail_id);
                truth.triples.insert((rel.relation_type.clone(), a, b));
            }
            let mut local: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
            for e in &doc.entities {
                // label of the first document mentioning the entity wins
                corpus.entry(e.concept_type.clone()).or_default().entry(e.id.clone()).or_insert_with(|| surface(e).to_string());
                local.entry(e.concept_type.clone()).or_default().insert(e.id.clone(), surface(e).to_string());
            }
            truth.doc_pools.insert(doc.doc_id.clone(), flatten(local));
        }
        truth.corpus_pool = flatten(corpus);
        truth
    }

    pub fn contains(&self, predicate: &str, a: &str, b: &str) -> bool {
        let (a, b) = undirected(a, b);
        self.triples.contains(&(predicate.to_string(), a, b))
    }

    pub fn pool(&self, scope: PoolScope, doc_id: &str, concept: &str) -> &[PoolEntry] {
        let pools = match scope {
            PoolScope::Corpus => Some(&self.corpus_pool),
            PoolScope::SameDocument => self.doc_pools.get(doc_id),
        };
        pools.and_then(|p| p.get(concept)).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn flatten(pools: BTreeMap<String, BTreeMap<String, String>>) -> BTreeMap<String, Vec<PoolEntry>> {
    pools
        .into_iter()
        .map(|(concept, ids)| (concept, ids.into_iter().map(|(id, label)| PoolEntry { id, label }).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoCandidate {
    pub doc_id: String,
    pub relation_index: usize,
    pub subject_id: String,
    pub object_id: String,
    pub concept_type: String,
    pub pool_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSet {
    pub negatives: Vec<LabeledInstance>,
    pub skipped: Vec<NoCandidate>,
}

fn object_concept(instance: &LabeledInstance, docs_pool: &GroundTruth, scope: PoolScope) -> Option<String> {
    let tail = instance.statement.object_id.as_deref()?;
    let pools = match scope {
        PoolScope::Corpus => &docs_pool.corpus_pool,
        PoolScope::SameDocument => docs_pool.doc_pools.get(&instance.doc_id)?,
    };
    pools.iter().find(|(_, entries)| entries.iter().any(|e| e.id == tail)).map(|(c, _)| c.clone())
}

/// Replaces the object of every positive with a different entity of the same
/// concept type, never producing a triple that exists in the ground truth.
/// Candidates are filtered first and then one is drawn uniformly, which is
/// equivalent to redrawing rejected samples.
pub fn generate_negatives(
    positives: &[LabeledInstance],
    truth: &GroundTruth,
    scope: PoolScope,
    seed: u64,
) -> NegativeSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = NegativeSet::default();
    for positive in positives {
        let subject_id = positive.statement.subject_id.clone().unwrap_or_default();
        let object_id = positive.statement.object_id.clone().unwrap_or_default();
        let predicate = positive.relation_type.label();
        let concept = object_concept(positive, truth, scope).unwrap_or_default();
        let pool = truth.pool(scope, &positive.doc_id, &concept);
        let original_label = positive.statement.object_label.to_lowercase();
        let candidates: Vec<&PoolEntry> = pool
            .iter()
            .filter(|e| e.id != object_id && e.id != subject_id)
            .filter(|e| e.label.to_lowercase() != original_label)
            .filter(|e| !truth.contains(predicate, &subject_id, &e.id))
            .collect();
        if candidates.is_empty() {
            log::warn!("no replacement object for {} relation {}", positive.doc_id, positive.relation_index);
            out.skipped.push(NoCandidate {
                doc_id: positive.doc_id.clone(),
                relation_index: positive.relation_index,
                subject_id,
                object_id,
                concept_type: concept,
                pool_size: pool.len(),
            });
            continue;
        }
        let pick = candidates[rng.random_range(0..candidates.len())];
        let mut statement = positive.statement.clone();
        statement.object_label = pick.label.clone();
        statement.object_id = Some(pick.id.clone());
        out.negatives.push(LabeledInstance {
            statement,
            gold: BinaryDecision::NotSupported,
            origin: Origin::Corrupted,
            ..positive.clone()
        });
    }
    out
}

#[derive(Serialize)]
struct VersionedRef<'a> {
    schema_version: &'a str,
    #[serde(flatten)]
    instance: &'a LabeledInstance,
}

#[derive(Deserialize)]
struct Versioned {
    schema_version: String,
    #[serde(flatten)]
    instance: LabeledInstance,
}

pub fn to_jsonl(instances: &[LabeledInstance]) -> String {
    let mut out = String::new();
    for instance in instances {
        let line = serde_json::to_string(&VersionedRef { schema_version: SCHEMA_VERSION, instance })
            .expect("instances serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<LabeledInstance>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record: Versioned = serde_json::from_str(line).map_err(|e| DatasetError::MalformedInput {
            doc_id: String::new(),
            reason: format!("line {}: {e}", idx + 1),
        })?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::MalformedInput {
                doc_id: record.instance.doc_id,
                reason: format!("line {}: unsupported schema version {}", idx + 1, record.schema_version),
            });
        }
        out.push(record.instance);
    }
    Ok(out)
}

/// Counts published for the full dataset, per relation type (positives; the
/// negatives match).
pub const PUBLISHED_COUNTS: [(RelationType, usize); 2] =
    [(RelationType::PositiveCorrelation, 1019), (RelationType::NegativeCorrelation, 700)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub relation_type: RelationType,
    pub concept_pair: (String, String),
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTotal {
    pub relation_type: RelationType,
    pub positives: usize,
    pub negatives: usize,
    pub published: usize,
    /// Positives minus the published count.
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: String,
    pub seed: u64,
    pub pool_scope: PoolScope,
    pub documents: usize,
    pub pairs: Vec<PairCount>,
    pub totals: Vec<RelationTotal>,
    pub skipped: Vec<NoCandidate>,
    /// Positives per input file, filled in when the corpus was loaded from disk.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub splits: Vec<SplitCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCount {
    /// File name of the split, e.g. `Train.BioC.JSON`.
    pub split: String,
    pub documents: usize,
    /// Positives keyed by relation label.
    pub positives: BTreeMap<String, usize>,
}

/// Per-file document and positive counts of the corpus at `path`.
pub fn split_counts(path: &Path) -> Result<Vec<SplitCount>, DatasetError> {
    let mut out = Vec::new();
    for file in bioc_files(path)? {
        let docs = load_biored(&file)?;
        let mut positives: BTreeMap<String, usize> =
            RelationType::ALL.iter().map(|r| (r.label().to_string(), 0)).collect();
        for p in extract_positives(&docs) {
            *positives.entry(p.relation_type.label().to_string()).or_default() += 1;
        }
        let split = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.push(SplitCount { split, documents: docs.len(), positives });
    }
    Ok(out)
}

pub fn build_manifest(
    documents: usize,
    positives: &[LabeledInstance],
    negatives: &NegativeSet,
    scope: PoolScope,
    seed: u64,
) -> DatasetManifest {
    let mut pairs: BTreeMap<(RelationType, (String, String)), (usize, usize)> = BTreeMap::new();
    for p in positives {
        pairs.entry((p.relation_type, p.concept_pair.clone())).or_default().0 += 1;
    }
    for n in &negatives.negatives {
        pairs.entry((n.relation_type, n.concept_pair.clone())).or_default().1 += 1;
    }
    let totals = PUBLISHED_COUNTS
        .iter()
        .map(|&(relation_type, published)| {
            let pos = positives.iter().filter(|p| p.relation_type == relation_type).count();
            let neg = negatives.negatives.iter().filter(|n| n.relation_type == relation_type).count();
            RelationTotal { relation_type, positives: pos, negatives: neg, published, delta: pos as i64 - published as i64 }
        })
        .collect();
    DatasetManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        seed,
        pool_scope: scope,
        documents,
        pairs: pairs
            .into_iter()
            .map(|((relation_type, concept_pair), (positives, negatives))| PairCount {
                relation_type,
                concept_pair,
                positives,
                negatives,
            })
            .collect(),
        totals,
        skipped: negatives.skipped.clone(),
        splits: Vec::new(),
    }
}

/// Distinct concept types present in a corpus.
pub fn concept_types(docs: &[BioRedDocument]) -> BTreeSet<String> {
    docs.iter().flat_map(|d| d.entities.iter().map(|e| e.concept_type.clone())).collect()
}
