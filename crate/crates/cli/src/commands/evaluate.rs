use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use kgtrace::dataset::biored::{from_jsonl, RelationType};
use kgtrace::dataset::{load_snli, pick_nli_examples, sample_snli_test};
use kgtrace::evaluation::tables::{metric_table_markdown, nli_table, nli_table_markdown, pair_table, relation_table};
use kgtrace::evaluation::{
    evaluate_baseline, evaluate_biored, evaluate_snli, EvaluationError, Reconciliation, SentenceClassifier,
};
use kgtrace::model::NliClass;
use serde::Deserialize;

use super::Outcome;
use crate::exit::CliError;
use crate::manifest::{write_output, RunManifest};
use crate::wiring::{sha256_file, Context};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(subcommand)]
    pub target: EvaluateTarget,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateTarget {
    /// Ask the LLM about every instance of a BioRED-Verify dataset.
    Biored {
        /// JSON-lines dataset written by build-dataset.
        dataset: PathBuf,
    },
    /// Three-way natural language inference over SNLI records.
    Snli {
        /// SNLI JSON-lines file the evaluated records are sampled from.
        records: PathBuf,
        /// SNLI JSON-lines file the in-prompt examples are picked from.
        #[arg(long)]
        examples_from: PathBuf,
        /// Number of records to sample; all records when omitted.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Sentence-level NLI baseline over a BioRED-Verify dataset, using
    /// recorded classifier labels.
    Baseline {
        dataset: PathBuf,
        /// JSON-lines file of {"premise", "hypothesis", "label"} records.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value = "loose")]
        reconciliation: ReconciliationArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReconciliationArg {
    Loose,
    Strict,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<Vec<kgtrace::dataset::LabeledInstance>, CliError> {
    let instances = from_jsonl(&read(path)?)?;
    if instances.is_empty() {
        return Err(CliError::Input(format!("{} contains no instances", path.display())));
    }
    Ok(instances)
}

fn relation_tables(rows: &[kgtrace::evaluation::runner::PairRow], totals: &[(RelationType, kgtrace::evaluation::ConfusionCounts)], title: &str) -> String {
    let mut md = String::new();
    for relation in RelationType::ALL {
        md.push_str(&format!("## {}\n\n", pair_table(rows, relation).title));
        md.push_str(&metric_table_markdown(&pair_table(rows, relation)));
        md.push('\n');
    }
    md.push_str(&format!("## {title}\n\n"));
    md.push_str(&metric_table_markdown(&relation_table(title, totals)));
    md
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<Outcome, CliError> {
    let started = ctx.clock.now();
    let id = kgtrace::report::run_id("evaluation", started);
    let mut manifest = RunManifest::new("evaluate", &id, &ctx.config, ctx.fixtures.clone(), started);
    let (markdown, json) = match &args.target {
        EvaluateTarget::Biored { dataset } => {
            let instances = load_dataset(dataset)?;
            manifest.inputs.insert(dataset.display().to_string(), sha256_file(dataset)?);
            let gateway = ctx.gateway()?;
            let result = evaluate_biored(
                &instances,
                &gateway,
                &ctx.config.llm,
                ctx.config.decision_mode.into(),
                ctx.config.concurrency,
            )?;
            eprintln!("{} instances, {} failed requests, {} unparsed answers", instances.len(), result.failures, result.unparsed);
            let totals: Vec<_> = RelationType::ALL.iter().map(|&r| (r, result.relation_micro(r))).collect();
            let mut md = relation_tables(&result.rows, &totals, "Per relation");
            let overall = kgtrace::evaluation::compute_metrics(&result.overall());
            md.push_str(&format!(
                "\nOverall: precision {}, recall {}, F1 {}\n",
                overall.precision, overall.recall, overall.f1
            ));
            (md, serde_json::to_value(&result).map_err(|e| CliError::Io(e.to_string()))?)
        }
        EvaluateTarget::Snli { records, examples_from, sample } => {
            let pool = load_snli(records)?;
            let records_used = match sample {
                Some(n) => sample_snli_test(&pool, *n, ctx.config.seeds.snli_sample)?,
                None => pool,
            };
            if records_used.is_empty() {
                return Err(CliError::Input(format!("{} contains no records", records.display())));
            }
            let examples = pick_nli_examples(&load_snli(examples_from)?, ctx.config.seeds.examples)?;
            manifest.inputs.insert(records.display().to_string(), sha256_file(records)?);
            manifest.inputs.insert(examples_from.display().to_string(), sha256_file(examples_from)?);
            let gateway = ctx.gateway()?;
            let result = evaluate_snli(&records_used, &examples, &gateway, &ctx.config.llm, ctx.config.concurrency)?;
            let md = nli_table_markdown(&nli_table(&ctx.config.llm.model, &result.confusion)) + "\n";
            (md, serde_json::to_value(&result).map_err(|e| CliError::Io(e.to_string()))?)
        }
        EvaluateTarget::Baseline { dataset, labels, reconciliation } => {
            let instances = load_dataset(dataset)?;
            let classifier = RecordedClassifier::load(labels)?;
            manifest.inputs.insert(dataset.display().to_string(), sha256_file(dataset)?);
            manifest.inputs.insert(labels.display().to_string(), sha256_file(labels)?);
            let mode = match reconciliation {
                ReconciliationArg::Loose => Reconciliation::Loose,
                ReconciliationArg::Strict => Reconciliation::Strict,
            };
            let result = evaluate_baseline(&instances, &classifier, mode, ctx.config.concurrency)?;
            let totals: Vec<_> = RelationType::ALL.iter().map(|&r| (r, result.relation_total(r))).collect();
            let md = relation_tables(&result.rows, &totals, "Per relation");
            (md, serde_json::to_value(&result).map_err(|e| CliError::Io(e.to_string()))?)
        }
    };
    print!("{markdown}");
    write_output(&ctx.config.out, &format!("{id}.md"), &markdown, &mut manifest)?;
    let json = serde_json::to_string_pretty(&json).map_err(|e| CliError::Io(e.to_string()))?;
    write_output(&ctx.config.out, &format!("{id}.json"), &(json + "\n"), &mut manifest)?;
    manifest.ended_at = ctx.clock.now();
    manifest.network_requests_live = kgtrace::http::live_request_count();
    manifest.status = "completed".into();
    manifest.write(&ctx.config.out)?;
    Ok(Outcome::Completed)
}

#[derive(Deserialize)]
struct LabelRecord {
    premise: String,
    hypothesis: String,
    label: String,
}

/// Sentence classifier answering from recorded labels.
struct RecordedClassifier {
    labels: HashMap<(String, String), NliClass>,
}

impl RecordedClassifier {
    fn load(path: &Path) -> Result<Self, CliError> {
        let mut labels = HashMap::new();
        for (n, line) in read(path)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: LabelRecord = serde_json::from_str(line)
                .map_err(|e| CliError::Input(format!("{} line {}: {e}", path.display(), n + 1)))?;
            let class = NliClass::from_name(&record.label)
                .ok_or_else(|| CliError::Input(format!("{} line {}: unknown label {:?}", path.display(), n + 1, record.label)))?;
            labels.insert((record.premise, record.hypothesis), class);
        }
        Ok(Self { labels })
    }
}

impl SentenceClassifier for RecordedClassifier {
    fn name(&self) -> &str {
        "recorded"
    }

    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliClass, EvaluationError> {
        self.labels
            .get(&(premise.to_string(), hypothesis.to_string()))
            .copied()
            .ok_or_else(|| EvaluationError::Classifier(format!("no recorded label for {premise:?} / {hypothesis:?}")))
    }
}
