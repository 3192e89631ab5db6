use std::path::PathBuf;

use clap::{Args, ValueEnum};
use kgtrace::dataset::biored::{
    build_manifest, extract_positives, generate_negatives, load_biored, split_counts, to_jsonl, GroundTruth, PoolScope,
};
use kgtrace::dataset::DatasetError;

use super::Outcome;
use crate::exit::CliError;
use crate::manifest::{write_output, RunManifest};
use crate::wiring::{sha256_file, Context};

pub const DATASET_FILE: &str = "biored-verify.jsonl";
pub const DATASET_MANIFEST_FILE: &str = "biored-verify.manifest.json";

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolScopeArg {
    Corpus,
    SameDocument,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// BioRED BioC JSON file or directory of such files.
    pub biored: PathBuf,
    /// Seed for choosing replacement objects (overrides the configured seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where replacement objects are drawn from.
    #[arg(long, value_enum, default_value = "corpus")]
    pub pool: PoolScopeArg,
}

pub fn build_dataset(ctx: &Context, args: &BuildDatasetArgs) -> Result<Outcome, CliError> {
    if !args.biored.exists() {
        return Err(CliError::Input(format!("{} does not exist", args.biored.display())));
    }
    let started = ctx.clock.now();
    let seed = args.seed.unwrap_or(ctx.config.seeds.corruption);
    let scope = match args.pool {
        PoolScopeArg::Corpus => PoolScope::Corpus,
        PoolScopeArg::SameDocument => PoolScope::SameDocument,
    };
    let documents = load_biored(&args.biored)?;
    eprintln!("loaded {} documents", documents.len());
    let positives = extract_positives(&documents);
    if positives.is_empty() {
        return Err(DatasetError::InsufficientRecords {
            reason: format!("{} holds no relation of a verified type", args.biored.display()),
        }
        .into());
    }
    let truth = GroundTruth::from_documents(&documents);
    let negatives = generate_negatives(&positives, &truth, scope, seed);
    eprintln!(
        "{} positives, {} corrupted negatives, {} without a replacement candidate",
        positives.len(),
        negatives.negatives.len(),
        negatives.skipped.len()
    );
    let mut dataset_manifest = build_manifest(documents.len(), &positives, &negatives, scope, seed);
    dataset_manifest.splits = split_counts(&args.biored)?;
    let mut instances = positives;
    instances.extend(negatives.negatives.iter().cloned());

    let mut manifest = RunManifest::new("build-dataset", "build-dataset", &ctx.config, ctx.fixtures.clone(), started);
    if args.biored.is_file() {
        manifest.inputs.insert(args.biored.display().to_string(), sha256_file(&args.biored)?);
    }
    let manifest_json = serde_json::to_string_pretty(&dataset_manifest).map_err(|e| CliError::Io(e.to_string()))?;
    write_output(&ctx.config.out, DATASET_FILE, &to_jsonl(&instances), &mut manifest)?;
    write_output(&ctx.config.out, DATASET_MANIFEST_FILE, &(manifest_json + "\n"), &mut manifest)?;
    for total in &dataset_manifest.totals {
        println!(
            "{}: {} positives (published {}), {} negatives",
            total.relation_type.label(),
            total.positives,
            total.published,
            total.negatives
        );
    }
    manifest.ended_at = ctx.clock.now();
    manifest.status = "completed".into();
    manifest.details = serde_json::json!({ "seed": seed, "instances": instances.len() });
    manifest.write(&ctx.config.out)?;
    Ok(Outcome::Completed)
}
