use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionCounts;
use super::nli::NliConfusion;
use super::reconcile::{split_sentences, EntryJudgment, Reconciliation, SentenceClassifier};
use super::EvaluationError;
use crate::dataset::{LabeledInstance, Origin, RelationType, SnliRecord};
use crate::llm::parse::{parse_nli_label, parse_option};
use crate::llm::{LlmGateway, LlmParams};
use crate::model::{verdict_to_binary, BinaryDecision, DecisionMode, NliClass, NliLabel, Statement, Verdict};
use crate::par::map_ordered;
use crate::prompting::{render_nli_prompt, render_rdf_prompt, NliExample, RdfPrompt};

pub type PairKey = (RelationType, (String, String));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub doc_id: String,
    pub relation_index: usize,
    pub origin: Origin,
    pub gold: BinaryDecision,
    /// `None` when the request failed without a response.
    pub verdict: Option<Verdict>,
    pub decision: Option<BinaryDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub relation_type: RelationType,
    pub concept_pair: (String, String),
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BioRedEvaluation {
    pub decision_mode: DecisionMode,
    pub rows: Vec<PairRow>,
    pub outcomes: Vec<InstanceOutcome>,
    /// Instances without an answer, excluded from the counts.
    pub failures: usize,
    pub unparsed: usize,
}

impl BioRedEvaluation {
    pub fn rows_for(&self, relation: RelationType) -> Vec<&PairRow> {
        self.rows.iter().filter(|r| r.relation_type == relation).collect()
    }

    pub fn relation_micro(&self, relation: RelationType) -> ConfusionCounts {
        self.rows_for(relation).iter().map(|r| r.counts).sum()
    }

    pub fn overall(&self) -> ConfusionCounts {
        self.rows.iter().map(|r| r.counts).sum()
    }
}

/// Groups binary outcomes by (relation, concept pair).
pub fn group_counts<'a>(items: impl IntoIterator<Item = (&'a LabeledInstance, BinaryDecision)>) -> Vec<PairRow> {
    let mut groups: BTreeMap<PairKey, ConfusionCounts> = BTreeMap::new();
    for (instance, decision) in items {
        groups
            .entry((instance.relation_type, instance.concept_pair.clone()))
            .or_default()
            .record(instance.gold == BinaryDecision::Supported, decision == BinaryDecision::Supported);
    }
    let mut rows: Vec<PairRow> = groups
        .into_iter()
        .map(|((relation_type, concept_pair), counts)| PairRow { relation_type, concept_pair, counts })
        .collect();
    rows.sort_by_key(|r| (r.relation_type, pair_rank(&r.concept_pair)));
    rows
}

fn pair_rank(pair: &(String, String)) -> (usize, usize, String, String) {
    let rank = |c: &str| crate::dataset::biored::CONCEPT_ORDER.iter().position(|x| *x == c).unwrap_or(usize::MAX);
    (rank(&pair.0), rank(&pair.1), pair.0.clone(), pair.1.clone())
}

/// Asks the LLM once per instance with the whole grounding text as the
/// snippet.
pub fn evaluate_biored(
    instances: &[LabeledInstance],
    gateway: &LlmGateway,
    params: &LlmParams,
    mode: DecisionMode,
    concurrency: usize,
) -> Result<BioRedEvaluation, EvaluationError> {
    if instances.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let results = map_ordered(instances, concurrency, |instance| {
        let prompt = RdfPrompt::new(instance.statement.clone(), instance.grounding_text.clone())
            .map_err(|e| EvaluationError::Prompt(e.to_string()))?;
        let base = InstanceOutcome {
            doc_id: instance.doc_id.clone(),
            relation_index: instance.relation_index,
            origin: instance.origin,
            gold: instance.gold,
            verdict: None,
            decision: None,
            fingerprint: None,
            error: None,
        };
        match gateway.complete(params, &render_rdf_prompt(&prompt)) {
            Ok(response) => {
                let verdict = parse_option(&response.raw_text);
                Ok(InstanceOutcome {
                    decision: Some(verdict_to_binary(&verdict, mode)),
                    verdict: Some(verdict),
                    fingerprint: Some(response.request_fingerprint),
                    ..base
                })
            }
            Err(e) if !e.is_fatal() => Ok(InstanceOutcome { error: Some(e.to_string()), ..base }),
            Err(e) => Err(EvaluationError::Llm(e)),
        }
    });
    let outcomes: Vec<InstanceOutcome> = results.into_iter().collect::<Result<_, _>>()?;
    let rows = group_counts(instances.iter().zip(&outcomes).filter_map(|(i, o)| o.decision.map(|d| (i, d))));
    Ok(BioRedEvaluation {
        decision_mode: mode,
        rows,
        failures: outcomes.iter().filter(|o| o.decision.is_none()).count(),
        unparsed: outcomes.iter().filter(|o| matches!(o.verdict, Some(Verdict::Unparseable { .. }))).count(),
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliOutcome {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub gold: NliClass,
    pub answer: Option<NliLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnliEvaluation {
    pub model: String,
    pub examples: Vec<NliExample>,
    pub confusion: NliConfusion,
    pub outcomes: Vec<NliOutcome>,
    pub failures: usize,
}

pub fn evaluate_snli(
    records: &[SnliRecord],
    examples: &[NliExample],
    gateway: &LlmGateway,
    params: &LlmParams,
    concurrency: usize,
) -> Result<SnliEvaluation, EvaluationError> {
    if records.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let results = map_ordered(records, concurrency, |record| {
        let prompt = render_nli_prompt(&record.premise, &record.hypothesis, examples)
            .map_err(|e| EvaluationError::Prompt(e.to_string()))?;
        let base = NliOutcome { pair_id: record.pair_id.clone(), gold: record.gold, answer: None, error: None };
        match gateway.complete(params, &prompt) {
            Ok(response) => Ok(NliOutcome { answer: Some(parse_nli_label(&response.raw_text)), ..base }),
            Err(e) if !e.is_fatal() => Ok(NliOutcome { error: Some(e.to_string()), ..base }),
            Err(e) => Err(EvaluationError::Llm(e)),
        }
    });
    let outcomes: Vec<NliOutcome> = results.into_iter().collect::<Result<_, _>>()?;
    let confusion = super::nli::tally_nli(outcomes.iter().filter_map(|o| o.answer.map(|a| (o.gold, a))));
    Ok(SnliEvaluation {
        model: params.model.clone(),
        examples: examples.to_vec(),
        confusion,
        failures: outcomes.iter().filter(|o| o.answer.is_none()).count(),
        outcomes,
    })
}

/// The statement phrased as a sentence for a sentence-pair classifier.
pub fn statement_hypothesis(statement: &Statement) -> String {
    format!(
        "{} {} {}",
        statement.subject_label,
        statement.predicate_label.replace('_', " ").to_lowercase(),
        statement.object_label
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEvaluation {
    pub classifier: String,
    pub reconciliation: Reconciliation,
    pub rows: Vec<PairRow>,
    /// Sentence labels per instance, in sentence order.
    pub sentence_labels: Vec<Vec<NliClass>>,
}

impl BaselineEvaluation {
    pub fn relation_total(&self, relation: RelationType) -> ConfusionCounts {
        self.rows.iter().filter(|r| r.relation_type == relation).map(|r| r.counts).sum()
    }
}

/// Classifies every sentence of each grounding text against the statement and
/// merges the sentence labels into one judgment.
pub fn evaluate_baseline(
    instances: &[LabeledInstance],
    classifier: &dyn SentenceClassifier,
    reconciliation: Reconciliation,
    concurrency: usize,
) -> Result<BaselineEvaluation, EvaluationError> {
    if instances.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let labels = map_ordered(instances, concurrency, |instance| {
        let hypothesis = statement_hypothesis(&instance.statement);
        split_sentences(&instance.grounding_text)
            .iter()
            .map(|s| classifier.classify(s, &hypothesis))
            .collect::<Result<Vec<_>, _>>()
    });
    let labels: Vec<Vec<NliClass>> = labels.into_iter().collect::<Result<_, _>>()?;
    let mut decided = Vec::with_capacity(instances.len());
    for (instance, sentence_labels) in instances.iter().zip(&labels) {
        let decision = match reconciliation.apply(sentence_labels) {
            Ok(EntryJudgment::Entailment) => BinaryDecision::Supported,
            Ok(EntryJudgment::NotEntailment) | Err(EvaluationError::EmptyInput) => BinaryDecision::NotSupported,
            Err(e) => return Err(e),
        };
        decided.push((instance, decision));
    }
    Ok(BaselineEvaluation {
        classifier: classifier.name().to_string(),
        reconciliation,
        rows: group_counts(decided),
        sentence_labels: labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::biored::SCHEMA_VERSION;
    use crate::llm::{default_params, MockProvider};
    use crate::retry::RetryPolicy;
    use std::sync::Arc;

    fn instance(doc: &str, origin: Origin, pair: (&str, &str), text: &str) -> LabeledInstance {
        let gold = match origin {
            Origin::GroundTruth => BinaryDecision::Supported,
            Origin::Corrupted => BinaryDecision::NotSupported,
        };
        LabeledInstance {
            doc_id: doc.into(),
            relation_index: 0,
            statement: Statement::new("aspirin", "Positive_Correlation", format!("target {doc}")).unwrap(),
            grounding_text: text.into(),
            gold,
            concept_pair: (pair.0.into(), pair.1.into()),
            relation_type: RelationType::PositiveCorrelation,
            origin,
        }
    }

    #[test]
    fn biored_counts_by_pair() {
        assert!(!SCHEMA_VERSION.is_empty());
        let cd = ("ChemicalEntity", "DiseaseOrPhenotypicFeature");
        let gg = ("GeneOrGeneProduct", "GeneOrGeneProduct");
        let data = vec![
            instance("1", Origin::GroundTruth, gg, "text one"),
            instance("2", Origin::Corrupted, gg, "text two"),
            instance("3", Origin::GroundTruth, cd, "text three"),
            instance("4", Origin::Corrupted, cd, "text four"),
        ];
        let mock = MockProvider::new()
            .with_rule(["text one"], "a) direct")
            .with_rule(["text two"], "b) maybe")
            .with_rule(["text three"], "b) maybe")
            .with_rule(["text four"], "a) yes");
        let gw = LlmGateway::new(Arc::new(mock)).with_retry(RetryPolicy::immediate(1));
        let ev = evaluate_biored(&data, &gw, &default_params(), DecisionMode::FavorPrecision, 2).unwrap();
        assert_eq!(ev.rows[0].concept_pair.0, "ChemicalEntity");
        assert_eq!(ev.rows[0].counts, ConfusionCounts::new(0, 0, 1, 1));
        assert_eq!(ev.rows[1].counts, ConfusionCounts::new(1, 1, 0, 0));
        assert_eq!(ev.overall(), ConfusionCounts::new(1, 1, 1, 1));
        let recall = evaluate_biored(&data, &gw, &default_params(), DecisionMode::FavorRecall, 1).unwrap();
        assert_eq!(recall.overall(), ConfusionCounts::new(2, 0, 2, 0));
        assert!(matches!(evaluate_biored(&[], &gw, &default_params(), DecisionMode::FavorRecall, 1), Err(EvaluationError::EmptyInput)));
    }

    struct Keyword;
    impl SentenceClassifier for Keyword {
        fn name(&self) -> &str {
            "keyword"
        }
        fn classify(&self, premise: &str, _: &str) -> Result<NliClass, EvaluationError> {
            Ok(if premise.contains("raises") {
                NliClass::Entailment
            } else if premise.contains("lowers") {
                NliClass::Contradiction
            } else {
                NliClass::Neutral
            })
        }
    }

    #[test]
    fn baseline_reconciles_sentences() {
        let cd = ("ChemicalEntity", "DiseaseOrPhenotypicFeature");
        let data = vec![
            instance("1", Origin::GroundTruth, cd, "It raises risk. Nothing else."),
            instance("2", Origin::GroundTruth, cd, "It raises risk. It also lowers it."),
            instance("3", Origin::Corrupted, cd, "Unrelated. Also unrelated."),
        ];
        let strict = evaluate_baseline(&data, &Keyword, Reconciliation::Strict, 2).unwrap();
        assert_eq!(strict.relation_total(RelationType::PositiveCorrelation), ConfusionCounts::new(1, 1, 0, 1));
        let loose = evaluate_baseline(&data, &Keyword, Reconciliation::Loose, 2).unwrap();
        assert_eq!(loose.relation_total(RelationType::PositiveCorrelation), ConfusionCounts::new(2, 1, 0, 0));
        assert_eq!(strict.sentence_labels[1], vec![NliClass::Entailment, NliClass::Contradiction]);
        assert_eq!(statement_hypothesis(&data[0].statement), "aspirin positive correlation target 1");
    }

    #[test]
    fn snli_tallies_answers() {
        let records = vec![
            SnliRecord { pair_id: Some("x".into()), premise: "A man sleeps.".into(), hypothesis: "A man rests.".into(), gold: NliClass::Entailment },
            SnliRecord { pair_id: Some("y".into()), premise: "A dog runs.".into(), hypothesis: "A cat sits.".into(), gold: NliClass::Neutral },
        ];
        let examples: Vec<NliExample> = NliClass::ALL
            .iter()
            .map(|&c| NliExample { id: None, premise: format!("p {c}"), hypothesis: format!("h {c}"), label: c })
            .collect();
        let mock = MockProvider::new().with_rule(["A man rests."], "a) entailment").with_rule(["A cat sits."], "I cannot decide.");
        let gw = LlmGateway::new(Arc::new(mock)).with_retry(RetryPolicy::immediate(1));
        let ev = evaluate_snli(&records, &examples, &gw, &default_params(), 2).unwrap();
        assert_eq!(ev.confusion.correct(), 1);
        assert_eq!(ev.confusion.unparsed, [0, 1, 0]);
        assert_eq!(ev.confusion.accuracy().percent(1), "50.0");
    }
}
