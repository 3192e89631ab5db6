use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::Args;
use kgtrace::model::{parse_statements_tsv, ModelError, Statement};
use kgtrace::par::map_ordered;
use kgtrace::report::{build_trace_xml, render_html, run_id, ReportSummary};
use kgtrace::verifier::{VerificationSession, VerifyError};
use kgtrace::wikidata::{EntityId, EntityInfo};

use super::Outcome;
use crate::exit::CliError;
use crate::manifest::{write_output, RunManifest};
use crate::wiring::Context;

#[derive(Debug, Args)]
pub struct VerifyWikidataArgs {
    /// Wikidata item, e.g. Q36233.
    pub entity: String,
    /// Verify at most this many of the selected statements.
    #[arg(long)]
    pub max_statements: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyWikipediaArgs {
    /// Wikidata item whose English Wikipedia article is used, e.g. Q179924.
    pub entity: String,
    /// Tab-separated statements to verify instead of the Wikidata selection.
    #[arg(long)]
    pub statements: Option<PathBuf>,
}

fn parse_entity(raw: &str) -> Result<EntityId, CliError> {
    raw.parse().map_err(|e| CliError::Input(format!("{e}")))
}

fn load_statements(path: &PathBuf, entity: EntityId) -> Result<Vec<Statement>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let statements = parse_statements_tsv(&text).map_err(|e| match e {
        ModelError::MalformedLine { line, reason } => {
            CliError::Input(format!("{} line {line}: {reason}", path.display()))
        }
        other => CliError::Input(format!("{}: {other}", path.display())),
    })?;
    if statements.is_empty() {
        return Err(CliError::Input(format!("{} contains no statements", path.display())));
    }
    Ok(statements
        .into_iter()
        .map(|s| {
            if s.subject_id.is_some() {
                s
            } else {
                let (p, o) = (s.predicate_id.clone(), s.object_id.clone());
                s.with_ids(Some(entity.to_string()), p, o)
            }
        })
        .collect())
}

/// A statement that could not be verified for lack of retrievable documents.
#[derive(Debug, serde::Serialize)]
struct Unverified {
    statement: Statement,
    reason: String,
}

fn run_sessions<F>(ctx: &Context, statements: &[Statement], verify: F) -> Vec<Result<VerificationSession, VerifyError>>
where
    F: Fn(&Statement) -> Result<VerificationSession, VerifyError> + Sync,
{
    let done = AtomicUsize::new(0);
    let total = statements.len();
    map_ordered(statements, ctx.config.concurrency, |statement| {
        let result = verify(statement);
        let n = done.fetch_add(1, Ordering::SeqCst) + 1;
        let status = match &result {
            Ok(s) if s.interrupted => "interrupted".to_string(),
            Ok(s) if s.is_confirmed() => format!("confirmed by {} paragraph(s)", s.traces.len()),
            Ok(_) => "no support found".to_string(),
            Err(e) => format!("failed: {e}"),
        };
        eprintln!("[{n}/{total}] {statement}: {status}");
        result
    })
}

struct Finished<'a> {
    command: &'a str,
    info: &'a EntityInfo,
    wikipedia_revision: Option<u64>,
    statements: Vec<Statement>,
    results: Vec<Result<VerificationSession, VerifyError>>,
    started: chrono::DateTime<chrono::Utc>,
}

fn finish(ctx: &Context, f: Finished<'_>) -> Result<Outcome, CliError> {
    let id = run_id(&f.info.id.to_string(), f.started);
    let mut manifest = RunManifest::new(f.command, &id, &ctx.config, ctx.fixtures.clone(), f.started);
    let mut sessions = Vec::new();
    let mut unverified = Vec::new();
    let mut fatal = None;
    for (statement, result) in f.statements.into_iter().zip(f.results) {
        match result {
            Ok(session) => sessions.push(session),
            Err(e @ VerifyError::NoDocumentsRetrievable(_)) => unverified.push(Unverified { statement, reason: e.to_string() }),
            Err(e) => {
                fatal.get_or_insert(e);
            }
        }
    }
    let interrupted = sessions.iter().any(|s| s.interrupted);
    let ended = ctx.clock.now();
    manifest.ended_at = ended;
    manifest.network_requests_live = kgtrace::http::live_request_count();
    manifest.details = serde_json::json!({
        "entity": f.info.id.to_string(),
        "statements": sessions.len() + unverified.len(),
        "confirmed": sessions.iter().filter(|s| s.is_confirmed()).count(),
        "unverified": unverified,
        "fixture_requests_served": ctx.fixtures_served(),
    });
    if let Some(e) = fatal {
        manifest.status = format!("failed: {e}");
        manifest.write(&ctx.config.out)?;
        return Err(e.into());
    }
    let summary = ReportSummary::for_run(
        &ctx.config.llm.model,
        f.started,
        ended,
        f.info,
        f.wikipedia_revision,
        &ctx.config.endpoints.sparql,
    )?;
    let xml = build_trace_xml(&sessions, &summary)?;
    let html = render_html(&xml)?;
    let sessions_json = serde_json::to_string_pretty(&sessions).map_err(|e| CliError::Io(e.to_string()))?;
    write_output(&ctx.config.out, &format!("{id}.xml"), &xml, &mut manifest)?;
    write_output(&ctx.config.out, &format!("{id}.html"), &html, &mut manifest)?;
    write_output(&ctx.config.out, &format!("{id}.sessions.json"), &(sessions_json + "\n"), &mut manifest)?;
    manifest.status = if interrupted { "interrupted".into() } else { "completed".into() };
    manifest.write(&ctx.config.out)?;
    println!("{}", ctx.config.out.join(format!("{id}.html")).display());
    Ok(if interrupted { Outcome::Interrupted } else { Outcome::Completed })
}

pub fn verify_wikidata(ctx: &Context, args: &VerifyWikidataArgs) -> Result<Outcome, CliError> {
    let entity = parse_entity(&args.entity)?;
    let started = ctx.clock.now();
    let client = ctx.wikidata();
    let info = client.entity_info(entity)?;
    let mut statements: Vec<Statement> =
        client.unsourced_mandatory_statements(entity)?.into_iter().map(|s| s.statement).collect();
    eprintln!("{} unsourced statements of {entity} need a reference", statements.len());
    if let Some(max) = args.max_statements {
        statements.truncate(max);
    }
    let verifier = ctx.verifier(true)?;
    let results = run_sessions(ctx, &statements, |s| verifier.verify_via_web_search(s));
    finish(ctx, Finished { command: "verify-wikidata", info: &info, wikipedia_revision: None, statements, results, started })
}

pub fn verify_wikipedia(ctx: &Context, args: &VerifyWikipediaArgs) -> Result<Outcome, CliError> {
    let entity = parse_entity(&args.entity)?;
    let statements = match &args.statements {
        Some(path) => load_statements(path, entity)?,
        None => Vec::new(),
    };
    let started = ctx.clock.now();
    let client = ctx.wikidata();
    let info = client.entity_info(entity)?;
    let article = info.enwiki_url.clone().ok_or_else(|| CliError::from(kgtrace::wikidata::WikidataError::NoSitelink(entity)))?;
    let statements = if args.statements.is_some() {
        statements
    } else {
        client.unsourced_mandatory_statements(entity)?.into_iter().map(|s| s.statement).collect()
    };
    let verifier = ctx.verifier(false)?;
    let results = run_sessions(ctx, &statements, |s| verifier.verify_via_wikipedia_article(s, &article));
    let revision = results.iter().flatten().find_map(|s| s.article_revision);
    finish(ctx, Finished { command: "verify-wikipedia", info: &info, wikipedia_revision: revision, statements, results, started })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statements_file_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        fs::write(&path, "# comment\nA\tb\tc\nbroken line\n").unwrap();
        let entity = parse_entity("Q1").unwrap();
        let err = load_statements(&path, entity).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        fs::write(&path, "A\tb\tc\n").unwrap();
        let ok = load_statements(&path, entity).unwrap();
        assert_eq!(ok[0].subject_id.as_deref(), Some("Q1"));
    }
}
