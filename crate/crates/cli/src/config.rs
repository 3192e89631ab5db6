//! Run configuration. Values are resolved per field in the order
//! command-line flag, environment variable, config file, built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kgtrace::llm::{default_params, LlmParams};
use kgtrace::model::DecisionMode;
use kgtrace::retrieval::fetch::DEFAULT_ARCHIVE_API;
use kgtrace::retrieval::search::DEFAULT_HIT_LIMIT;
use kgtrace::wikidata::{DEFAULT_API_ENDPOINT, DEFAULT_SPARQL_ENDPOINT};
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

pub const CONFIG_ENV: &str = "KGTRACE_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LlmProviderKind {
    Replicate,
    Openai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionModeArg {
    #[serde(alias = "favor_precision")]
    FavorPrecision,
    #[serde(alias = "favor_recall")]
    FavorRecall,
}

impl From<DecisionModeArg> for DecisionMode {
    fn from(m: DecisionModeArg) -> Self {
        match m {
            DecisionModeArg::FavorPrecision => DecisionMode::FavorPrecision,
            DecisionModeArg::FavorRecall => DecisionMode::FavorRecall,
        }
    }
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "KGTRACE_OUT")]
    pub out: Option<PathBuf>,
    /// Replay recorded fixtures from this directory; live network access is disabled.
    #[arg(long, global = true, env = "KGTRACE_REPLAY")]
    pub replay: Option<PathBuf>,
    /// Record every HTTP exchange into this fixture directory.
    #[arg(long, global = true, env = "KGTRACE_RECORD")]
    pub record: Option<PathBuf>,
    /// HTTP response cache directory (live mode only).
    #[arg(long, global = true, env = "KGTRACE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true, env = "KGTRACE_LLM_PROVIDER")]
    pub llm_provider: Option<LlmProviderKind>,
    #[arg(long, global = true, env = "KGTRACE_MODEL")]
    pub model: Option<String>,
    #[arg(long, global = true, env = "KGTRACE_LLM_SEED")]
    pub llm_seed: Option<i64>,
    #[arg(long, global = true, env = "KGTRACE_TEMPERATURE")]
    pub temperature: Option<f64>,
    #[arg(long, global = true, env = "KGTRACE_TOP_P")]
    pub top_p: Option<f64>,
    #[arg(long, global = true, env = "KGTRACE_MAX_NEW_TOKENS")]
    pub max_new_tokens: Option<u32>,
    #[arg(long, global = true, value_enum, env = "KGTRACE_DECISION_MODE")]
    pub decision_mode: Option<DecisionModeArg>,
    /// Statements or instances processed in parallel.
    #[arg(long, global = true, env = "KGTRACE_CONCURRENCY")]
    pub concurrency: Option<usize>,
    /// Upper bound on concurrent LLM requests.
    #[arg(long, global = true, env = "KGTRACE_LLM_IN_FLIGHT")]
    pub llm_in_flight: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out: Option<PathBuf>,
    replay: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    decision_mode: Option<DecisionModeArg>,
    concurrency: Option<usize>,
    #[serde(default)]
    llm: FileLlm,
    #[serde(default)]
    search: FileSearch,
    #[serde(default)]
    endpoints: FileEndpoints,
    #[serde(default)]
    seeds: FileSeeds,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLlm {
    provider: Option<LlmProviderKind>,
    model: Option<String>,
    seed: Option<i64>,
    top_p: Option<f64>,
    temperature: Option<f64>,
    max_new_tokens: Option<u32>,
    min_new_tokens: Option<i32>,
    system_prompt: Option<String>,
    base_url: Option<String>,
    context_tokens: Option<usize>,
    max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSearch {
    hit_limit: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEndpoints {
    sparql: Option<String>,
    wikidata_api: Option<String>,
    archive_api: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSeeds {
    corruption: Option<u64>,
    snli_sample: Option<u64>,
    examples: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoints {
    pub sparql: String,
    pub wikidata_api: String,
    pub archive_api: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub corruption: u64,
    pub snli_sample: u64,
    pub examples: u64,
}

/// Fully resolved settings. Serialized into every run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub llm_provider: LlmProviderKind,
    pub llm_base_url: Option<String>,
    pub llm: LlmParams,
    pub context_tokens: usize,
    pub llm_in_flight: usize,
    pub hit_limit: usize,
    pub endpoints: Endpoints,
    pub decision_mode: DecisionModeArg,
    pub concurrency: usize,
    pub cache_dir: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub seeds: Seeds,
    pub out: PathBuf,
    pub config_file: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_CONCURRENCY: usize = 4;

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        // relative paths in a config file are taken from the file's directory
        let base = args.config.as_deref().and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

        let defaults = default_params();
        let llm = LlmParams {
            model: args.model.clone().or(file.llm.model).unwrap_or(defaults.model),
            seed: args.llm_seed.or(file.llm.seed).unwrap_or(defaults.seed),
            top_p: args.top_p.or(file.llm.top_p).unwrap_or(defaults.top_p),
            temperature: args.temperature.or(file.llm.temperature).unwrap_or(defaults.temperature),
            max_new_tokens: args.max_new_tokens.or(file.llm.max_new_tokens).unwrap_or(defaults.max_new_tokens),
            min_new_tokens: file.llm.min_new_tokens.unwrap_or(defaults.min_new_tokens),
            system_prompt: file.llm.system_prompt.unwrap_or(defaults.system_prompt),
        };
        llm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let concurrency = args.concurrency.or(file.concurrency).unwrap_or(DEFAULT_CONCURRENCY);
        if concurrency == 0 {
            return Err(CliError::Config("concurrency must be at least 1".into()));
        }
        let replay = args.replay.clone().or(rel(file.replay));
        // the replay clock advances per reading, so only a sequential run
        // reproduces its timestamps
        let concurrency = if replay.is_some() { 1 } else { concurrency };
        let config = Self {
            llm_provider: args.llm_provider.or(file.llm.provider).unwrap_or(LlmProviderKind::Replicate),
            llm_base_url: file.llm.base_url,
            llm,
            context_tokens: file.llm.context_tokens.unwrap_or(kgtrace::llm::gateway::DEFAULT_CONTEXT_TOKENS),
            llm_in_flight: args
                .llm_in_flight
                .or(file.llm.max_in_flight)
                .unwrap_or(kgtrace::llm::gateway::DEFAULT_MAX_IN_FLIGHT)
                .max(1),
            hit_limit: file.search.hit_limit.unwrap_or(DEFAULT_HIT_LIMIT),
            endpoints: Endpoints {
                sparql: file.endpoints.sparql.unwrap_or_else(|| DEFAULT_SPARQL_ENDPOINT.into()),
                wikidata_api: file.endpoints.wikidata_api.unwrap_or_else(|| DEFAULT_API_ENDPOINT.into()),
                archive_api: file.endpoints.archive_api.unwrap_or_else(|| DEFAULT_ARCHIVE_API.into()),
            },
            decision_mode: args.decision_mode.or(file.decision_mode).unwrap_or(DecisionModeArg::FavorPrecision),
            concurrency,
            cache_dir: args.cache_dir.clone().or(rel(file.cache_dir)),
            replay,
            record: args.record.clone(),
            seeds: Seeds {
                corruption: file.seeds.corruption.unwrap_or(DEFAULT_SEED),
                snli_sample: file.seeds.snli_sample.unwrap_or(DEFAULT_SEED),
                examples: file.seeds.examples.unwrap_or(DEFAULT_SEED),
            },
            out: args.out.clone().or(rel(file.out)).unwrap_or_else(|| PathBuf::from("kgtrace-out")),
            config_file: args.config.clone(),
        };
        if config.replay.is_some() && config.record.is_some() {
            return Err(CliError::Config("--replay and --record are mutually exclusive".into()));
        }
        Ok(config)
    }

    pub fn is_replay(&self) -> bool {
        self.replay.is_some()
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let raw = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
