use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use kgtrace::prompting::{template_manifest, TemplateInfo};
use serde::Serialize;

use crate::config::RunConfig;
use crate::exit::CliError;
use crate::wiring::FixtureIdentity;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

/// Everything needed to repeat a run: the resolved configuration, the prompt
/// template hashes, the fixture identity and the inputs read.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub arguments: Vec<String>,
    pub run_id: String,
    pub config: RunConfig,
    pub templates: Vec<TemplateInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<FixtureIdentity>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
    pub status: String,
    pub network_requests_live: u64,
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, run_id: &str, config: &RunConfig, fixtures: Option<FixtureIdentity>, started_at: DateTime<Utc>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            arguments: std::env::args().skip(1).collect(),
            run_id: run_id.to_string(),
            config: config.clone(),
            templates: template_manifest(),
            fixtures,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started_at,
            ended_at: started_at,
            status: "running".into(),
            network_requests_live: 0,
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<String, CliError> {
        let name = format!("{}{MANIFEST_SUFFIX}", self.run_id);
        let path = out_dir.join(&name);
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| CliError::io(path.display(), e))?;
        Ok(name)
    }
}

pub fn write_output(out_dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    let path = out_dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(path.display(), e))?;
    manifest.outputs.push(name.to_string());
    Ok(())
}
