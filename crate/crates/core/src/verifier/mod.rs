//! End-to-end statement verification against web-search results or against
//! the primary sources cited by the subject's Wikipedia article.

pub mod citations;

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use citations::{extract_reference_numbers, resolve_citations, CitationResolution, WikipediaCitation};

use crate::clock::Clock;
use crate::llm::{extract_justification, parse_option, LlmError, LlmGateway, LlmParams};
use crate::model::{statement_to_search_query, EvidenceTrace, Statement, Verdict};
use crate::prompting::{render_rdf_prompt, RdfPrompt};
use crate::retrieval::chunk::{chunk_fill_limit, is_valid_paragraph, DEFAULT_CHUNK_CHARS};
use crate::retrieval::fetch::{FetchError, Fetcher, GroundingDocument, DEFAULT_FETCH_CONCURRENCY};
use crate::retrieval::search::{web_search, SearchError, SearchProvider, DEFAULT_HIT_LIMIT};
use crate::retry::RetryPolicy;
use crate::wikidata::{EntityId, WikidataClient, WikidataError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationMode {
    WebSearch,
    Wikipedia,
}

impl VerificationMode {
    pub fn code(self) -> &'static str {
        match self {
            VerificationMode::WebSearch => "webSearch",
            VerificationMode::Wikipedia => "wikipedia",
        }
    }
}

/// Which chunk-level answers send a chunk to per-paragraph checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkPositive {
    #[default]
    DirectProofOrIndication,
    DirectProofOnly,
}

impl ChunkPositive {
    fn accepts(self, verdict: &Verdict) -> bool {
        match self {
            ChunkPositive::DirectProofOrIndication => matches!(verdict, Verdict::DirectProof | Verdict::Indication),
            ChunkPositive::DirectProofOnly => matches!(verdict, Verdict::DirectProof),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    /// Machine-readable reason, e.g. `unsupportedMediaType` or `danglingReference`.
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_number: Option<u32>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub url: String,
    /// Search rank, for web-search documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Citation number, for primary sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_number: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval_source: Option<crate::model::RetrievalSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip: Option<SkipRecord>,
    pub valid_paragraphs: usize,
    pub paragraphs_queried: usize,
    /// 1-based index of the confirming paragraph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confirmed_paragraph: Option<usize>,
}

impl DocumentRecord {
    fn skipped(url: &str, rank: Option<usize>, ref_number: Option<u32>, err: &FetchError) -> Self {
        Self {
            url: url.to_string(),
            rank,
            ref_number,
            retrieval_source: None,
            archive_url: None,
            skip: Some(SkipRecord {
                reason: err.skip_code().to_string(),
                url: Some(url.to_string()),
                ref_number,
                detail: err.to_string(),
            }),
            valid_paragraphs: 0,
            paragraphs_queried: 0,
            confirmed_paragraph: None,
        }
    }
}

/// A Wikipedia paragraph confirmed at paragraph level. It points to primary
/// sources but is never evidence on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntermediateMatch {
    pub chunk_index: usize,
    /// 1-based among the article's valid paragraphs.
    pub paragraph_index: usize,
    pub paragraph_text: String,
    pub ref_numbers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSession {
    pub statement: Statement,
    pub mode: VerificationMode,
    pub traces: Vec<EvidenceTrace>,
    pub documents: Vec<DocumentRecord>,
    pub skips: Vec<SkipRecord>,
    pub intermediate: Vec<IntermediateMatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_revision: Option<u64>,
    pub documents_examined: usize,
    pub paragraphs_queried: usize,
    pub llm_calls: usize,
    pub interrupted: bool,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl VerificationSession {
    fn new(statement: Statement, mode: VerificationMode, now: DateTime<Utc>) -> Self {
        Self {
            statement,
            mode,
            traces: Vec::new(),
            documents: Vec::new(),
            skips: Vec::new(),
            intermediate: Vec::new(),
            search_query: None,
            article_url: None,
            article_revision: None,
            documents_examined: 0,
            paragraphs_queried: 0,
            llm_calls: 0,
            interrupted: false,
            started_at: now,
            ended_at: now,
        }
    }

    pub fn is_confirmed(&self) -> bool {
        !self.traces.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("search failed: {0}")]
    Search(#[from] SearchError),
    #[error("no document could be retrieved for {0}")]
    NoDocumentsRetrievable(String),
    #[error("entity {0} has no English Wikipedia article")]
    NoSitelink(EntityId),
    #[error("statement has no usable subject id: {0}")]
    MissingSubject(String),
    #[error(transparent)]
    Wikidata(WikidataError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Fetch(FetchError),
    #[error("verifier misconfigured: {0}")]
    Misconfigured(String),
}

impl From<WikidataError> for VerifyError {
    fn from(e: WikidataError) -> Self {
        match e {
            WikidataError::NoSitelink(id) => VerifyError::NoSitelink(id),
            other => VerifyError::Wikidata(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub hit_limit: usize,
    pub chunk_chars: usize,
    pub chunk_positive: ChunkPositive,
    pub fetch_concurrency: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            hit_limit: DEFAULT_HIT_LIMIT,
            chunk_chars: DEFAULT_CHUNK_CHARS,
            chunk_positive: ChunkPositive::default(),
            fetch_concurrency: DEFAULT_FETCH_CONCURRENCY,
        }
    }
}

/// Result of checking one document paragraph by paragraph.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentOutcome {
    pub trace: Option<EvidenceTrace>,
    pub valid_paragraphs: usize,
    pub calls: usize,
    pub failures: Vec<SkipRecord>,
    pub interrupted: bool,
}

struct Article {
    doc: GroundingDocument,
    html: String,
}

pub struct Verifier {
    gateway: Arc<LlmGateway>,
    fetcher: Arc<Fetcher>,
    params: LlmParams,
    clock: Arc<dyn Clock>,
    config: VerifierConfig,
    search: Option<Arc<dyn SearchProvider>>,
    search_retry: RetryPolicy,
    wikidata: Option<Arc<WikidataClient>>,
    stop: Arc<AtomicBool>,
    articles: Mutex<HashMap<String, Arc<Article>>>,
}

impl Verifier {
    pub fn new(gateway: Arc<LlmGateway>, fetcher: Arc<Fetcher>, params: LlmParams, clock: Arc<dyn Clock>) -> Self {
        Self {
            gateway,
            fetcher,
            params,
            clock,
            config: VerifierConfig::default(),
            search: None,
            search_retry: RetryPolicy::default(),
            wikidata: None,
            stop: Arc::new(AtomicBool::new(false)),
            articles: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_config(mut self, config: VerifierConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_search(mut self, provider: Arc<dyn SearchProvider>, retry: RetryPolicy) -> Self {
        self.search = Some(provider);
        self.search_retry = retry;
        self
    }

    pub fn with_wikidata(mut self, client: Arc<WikidataClient>) -> Self {
        self.wikidata = Some(client);
        self
    }

    /// Once set, sessions stop before the next LLM call and come back marked
    /// as interrupted.
    pub fn with_stop_flag(mut self, stop: Arc<AtomicBool>) -> Self {
        self.stop = stop;
        self
    }

    pub fn params(&self) -> &LlmParams {
        &self.params
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn ask(&self, statement: &Statement, snippet: &str) -> Result<(Verdict, String, u64), LlmError> {
        let prompt = RdfPrompt::new(statement.clone(), snippet).map_err(|_| LlmError::EmptyPrompt)?;
        let response = self.gateway.complete(&self.params, &render_rdf_prompt(&prompt))?;
        Ok((parse_option(&response.raw_text), extract_justification(&response.raw_text), response.latency_ms))
    }

    /// Checks valid paragraphs in order and stops at the first direct proof.
    pub fn verify_against_document(
        &self,
        statement: &Statement,
        doc: &GroundingDocument,
    ) -> Result<DocumentOutcome, VerifyError> {
        let valid: Vec<&String> = doc.paragraphs.iter().filter(|p| is_valid_paragraph(p)).collect();
        let mut outcome = DocumentOutcome {
            trace: None,
            valid_paragraphs: valid.len(),
            calls: 0,
            failures: Vec::new(),
            interrupted: false,
        };
        let mut latency = 0u64;
        for (idx, paragraph) in valid.iter().enumerate() {
            if self.stopped() {
                outcome.interrupted = true;
                break;
            }
            outcome.calls += 1;
            match self.ask(statement, paragraph) {
                Ok((verdict, justification, ms)) => {
                    latency += ms;
                    if verdict == Verdict::DirectProof {
                        outcome.trace = Some(EvidenceTrace {
                            statement: statement.clone(),
                            document_url: doc.url.clone(),
                            retrieval_source: doc.retrieval_source,
                            archive_url: doc.archive_url.clone(),
                            paragraph_index: idx + 1,
                            paragraph_text: paragraph.to_string(),
                            verdict,
                            justification,
                            llm_model: self.params.model.clone(),
                            timestamp: self.clock.now(),
                            duration_ms: latency,
                        });
                        break;
                    }
                }
                Err(e) if !e.is_fatal() => {
                    log::warn!("paragraph {} of {} skipped: {e}", idx + 1, doc.url);
                    outcome.failures.push(SkipRecord {
                        reason: "llmFailure".into(),
                        url: Some(doc.url.clone()),
                        ref_number: None,
                        detail: format!("paragraph {}: {e}", idx + 1),
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(outcome)
    }

    fn record_document(
        &self,
        session: &mut VerificationSession,
        statement: &Statement,
        doc: &GroundingDocument,
        rank: Option<usize>,
        ref_number: Option<u32>,
    ) -> Result<(), VerifyError> {
        let outcome = self.verify_against_document(statement, doc)?;
        session.documents_examined += 1;
        session.paragraphs_queried += outcome.calls;
        session.llm_calls += outcome.calls;
        session.skips.extend(outcome.failures);
        session.interrupted |= outcome.interrupted;
        session.documents.push(DocumentRecord {
            url: doc.url.clone(),
            rank,
            ref_number,
            retrieval_source: Some(doc.retrieval_source),
            archive_url: doc.archive_url.clone(),
            skip: None,
            valid_paragraphs: outcome.valid_paragraphs,
            paragraphs_queried: outcome.calls,
            confirmed_paragraph: outcome.trace.as_ref().map(|t| t.paragraph_index),
        });
        session.traces.extend(outcome.trace);
        Ok(())
    }

    /// Searches the web for the statement and checks each hit in rank order.
    pub fn verify_via_web_search(&self, statement: &Statement) -> Result<VerificationSession, VerifyError> {
        let provider = self.search.as_ref().ok_or_else(|| VerifyError::Misconfigured("no search provider".into()))?;
        let mut session = VerificationSession::new(statement.clone(), VerificationMode::WebSearch, self.clock.now());
        let query = statement_to_search_query(statement);
        let hits = web_search(provider.as_ref(), &query, self.config.hit_limit, &self.search_retry)?;
        session.search_query = Some(query);
        let urls: Vec<String> = hits.iter().map(|h| h.url.clone()).collect();
        let fetched = self.fetcher.fetch_all(&urls, self.config.fetch_concurrency, false);
        let mut retrieved = 0;
        for (hit, result) in hits.iter().zip(fetched) {
            match result {
                Ok(doc) => {
                    retrieved += 1;
                    if session.interrupted || self.stopped() {
                        session.interrupted = true;
                        continue;
                    }
                    self.record_document(&mut session, statement, &doc, Some(hit.rank), None)?;
                }
                Err(FetchError::Transport(e)) => return Err(VerifyError::Fetch(FetchError::Transport(e))),
                Err(e) => {
                    log::info!("skipping {}: {e}", hit.url);
                    session.documents.push(DocumentRecord::skipped(&hit.url, Some(hit.rank), None, &e));
                }
            }
        }
        if !hits.is_empty() && retrieved == 0 {
            return Err(VerifyError::NoDocumentsRetrievable(session.search_query.unwrap_or_default()));
        }
        session.ended_at = self.clock.now();
        Ok(session)
    }

    fn article(&self, url: &str) -> Result<Arc<Article>, VerifyError> {
        if let Some(a) = self.articles.lock().expect("article cache lock").get(url) {
            return Ok(a.clone());
        }
        let (doc, html) = self.fetcher.fetch_document_with_html(url).map_err(|e| match e {
            FetchError::Transport(_) => VerifyError::Fetch(e),
            other => VerifyError::NoDocumentsRetrievable(format!("{url} ({other})")),
        })?;
        let article = Arc::new(Article { doc, html });
        self.articles.lock().expect("article cache lock").insert(url.to_string(), article.clone());
        Ok(article)
    }

    /// Resolves the statement's subject to its Wikipedia article and verifies
    /// through the article's cited sources.
    pub fn verify_via_wikipedia(&self, statement: &Statement) -> Result<VerificationSession, VerifyError> {
        let client = self.wikidata.as_ref().ok_or_else(|| VerifyError::Misconfigured("no Wikidata client".into()))?;
        let subject = statement
            .subject_id
            .as_deref()
            .ok_or_else(|| VerifyError::MissingSubject(statement.to_string()))?;
        let entity: EntityId = subject.parse().map_err(|_| VerifyError::MissingSubject(subject.to_string()))?;
        let url = client.resolve_wikipedia_url(entity)?;
        self.verify_via_wikipedia_article(statement, &url)
    }

    /// Two-phase drill-down: chunks, then paragraphs of positive chunks, then
    /// the primary sources cited by confirmed paragraphs. Only primary
    /// sources yield traces.
    pub fn verify_via_wikipedia_article(
        &self,
        statement: &Statement,
        article_url: &str,
    ) -> Result<VerificationSession, VerifyError> {
        let mut session = VerificationSession::new(statement.clone(), VerificationMode::Wikipedia, self.clock.now());
        let article = self.article(article_url)?;
        session.article_url = Some(article_url.to_string());
        session.article_revision = article.doc.revision_id;

        let valid: Vec<(String, String)> = article
            .doc
            .paragraphs
            .iter()
            .zip(&article.doc.paragraph_html)
            .filter(|(text, _)| is_valid_paragraph(text))
            .map(|(t, h)| (t.clone(), h.clone()))
            .collect();
        let texts: Vec<&str> = valid.iter().map(|(t, _)| t.as_str()).collect();
        let chunks = chunk_fill_limit(&texts, self.config.chunk_chars);
        let mut checked_sources: HashSet<String> = HashSet::new();

        'chunks: for chunk in &chunks {
            if self.stopped() {
                session.interrupted = true;
                break;
            }
            session.llm_calls += 1;
            let verdict = match self.ask(statement, &chunk.text()) {
                Ok((v, _, _)) => v,
                Err(e) if !e.is_fatal() => {
                    session.skips.push(SkipRecord {
                        reason: "llmFailure".into(),
                        url: Some(article_url.to_string()),
                        ref_number: None,
                        detail: format!("chunk {}: {e}", chunk.index + 1),
                    });
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            if !self.config.chunk_positive.accepts(&verdict) {
                continue;
            }
            for offset in 0..chunk.paragraphs.len() {
                if self.stopped() {
                    session.interrupted = true;
                    break 'chunks;
                }
                let position = chunk.first_paragraph + offset;
                let (text, html) = &valid[position];
                session.llm_calls += 1;
                session.paragraphs_queried += 1;
                let verdict = match self.ask(statement, text) {
                    Ok((v, _, _)) => v,
                    Err(e) if !e.is_fatal() => {
                        session.skips.push(SkipRecord {
                            reason: "llmFailure".into(),
                            url: Some(article_url.to_string()),
                            ref_number: None,
                            detail: format!("paragraph {}: {e}", position + 1),
                        });
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                if verdict != Verdict::DirectProof {
                    continue;
                }
                let numbers = extract_reference_numbers(html);
                session.intermediate.push(IntermediateMatch {
                    chunk_index: chunk.index,
                    paragraph_index: position + 1,
                    paragraph_text: text.clone(),
                    ref_numbers: numbers.clone(),
                });
                if numbers.is_empty() {
                    session.skips.push(SkipRecord {
                        reason: "noReference".into(),
                        url: Some(article_url.to_string()),
                        ref_number: None,
                        detail: format!("paragraph {} cites no source", position + 1),
                    });
                }
                let resolution = resolve_citations(&numbers, &article.html);
                for n in resolution.dangling {
                    session.skips.push(SkipRecord {
                        reason: "danglingReference".into(),
                        url: Some(article_url.to_string()),
                        ref_number: Some(n),
                        detail: format!("reference [{n}] has no entry in the reference list"),
                    });
                }
                for citation in resolution.citations {
                    if citation.urls.is_empty() {
                        session.skips.push(SkipRecord {
                            reason: "noUrl".into(),
                            url: None,
                            ref_number: Some(citation.ref_number),
                            detail: citation.citation_text.clone(),
                        });
                    }
                    for url in &citation.urls {
                        if !checked_sources.insert(url.clone()) {
                            continue;
                        }
                        if self.stopped() {
                            session.interrupted = true;
                            break 'chunks;
                        }
                        match self.fetcher.fetch_with_archive_fallback(url) {
                            Ok(doc) => {
                                self.record_document(&mut session, statement, &doc, None, Some(citation.ref_number))?
                            }
                            Err(FetchError::Transport(e)) => {
                                return Err(VerifyError::Fetch(FetchError::Transport(e)))
                            }
                            Err(e) => {
                                log::info!("skipping source [{}] {url}: {e}", citation.ref_number);
                                session
                                    .documents
                                    .push(DocumentRecord::skipped(url, None, Some(citation.ref_number), &e));
                            }
                        }
                    }
                }
            }
        }
        session.ended_at = self.clock.now();
        Ok(session)
    }

    /// Verifies several statements, up to `concurrency` at a time, keeping
    /// input order in the results.
    pub fn verify_many(
        &self,
        statements: &[Statement],
        mode: VerificationMode,
        concurrency: usize,
    ) -> Vec<Result<VerificationSession, VerifyError>> {
        crate::par::map_ordered(statements, concurrency, |statement| match mode {
            VerificationMode::WebSearch => self.verify_via_web_search(statement),
            VerificationMode::Wikipedia => self.verify_via_wikipedia(statement),
        })
    }
}
