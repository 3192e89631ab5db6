//! Wikidata access: selection of unsourced statements whose predicate demands
//! a reference, and resolution of entities to their English Wikipedia article.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{HttpRequest, HttpResponse, LimitedTransport, Transport, TransportError};
use crate::model::Statement;
use crate::template;

pub const DEFAULT_SPARQL_ENDPOINT: &str = "https://query.wikidata.org/sparql";
pub const DEFAULT_API_ENDPOINT: &str = "https://www.wikidata.org/w/api.php";
pub const DEFAULT_MAX_IN_FLIGHT: usize = 2;

const ENTITY_PREFIX: &str = "http://www.wikidata.org/entity/";
const UNSOURCED_QUERY: &str = include_str!("../assets/sparql/unsourced_statements.rq");
const CONSTRAINT_QUERY: &str = include_str!("../assets/sparql/citation_constrained_properties.rq");

/// A Wikidata item identifier, rendered `Q<id>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(NonZeroU64);

impl EntityId {
    pub fn new(numeric_id: u64) -> Option<Self> {
        NonZeroU64::new(numeric_id).map(Self)
    }

    pub fn numeric(self) -> u64 {
        self.0.get()
    }

    pub fn entity_url(self) -> String {
        format!("{ENTITY_PREFIX}{self}")
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid Wikidata entity id {0:?}")]
pub struct InvalidEntityId(pub String);

impl FromStr for EntityId {
    type Err = InvalidEntityId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let bare = trimmed.strip_prefix(ENTITY_PREFIX).unwrap_or(trimmed);
        let digits = bare.strip_prefix(['Q', 'q']).unwrap_or(bare);
        digits
            .parse::<u64>()
            .ok()
            .and_then(EntityId::new)
            .ok_or_else(|| InvalidEntityId(s.to_string()))
    }
}

impl TryFrom<String> for EntityId {
    type Error = InvalidEntityId;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<EntityId> for String {
    fn from(id: EntityId) -> Self {
        id.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsourcedStatement {
    pub statement: Statement,
    /// True when the predicate declares a citation-needed constraint.
    pub mandatory_reference: bool,
    pub statement_uri: String,
}

/// Entity metadata used for report summaries and Wikipedia resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub id: EntityId,
    pub label: Option<String>,
    pub last_revision: Option<u64>,
    pub enwiki_title: Option<String>,
    pub enwiki_url: Option<String>,
}

impl EntityInfo {
    /// Revision-pinned link to the entity page.
    pub fn permalink(&self) -> Option<String> {
        self.last_revision
            .map(|rev| format!("https://wikidata.org/w/index.php?title={}&oldid={rev}", self.id))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WikidataError {
    #[error("endpoint {endpoint} unavailable: {reason}")]
    EndpointUnavailable { endpoint: String, reason: String },
    #[error("malformed response from {endpoint}: {reason} (excerpt: {excerpt:?})")]
    MalformedResponse { endpoint: String, reason: String, excerpt: String },
    #[error("entity {0} does not exist")]
    UnknownEntity(EntityId),
    #[error("entity {0} has no English Wikipedia article")]
    NoSitelink(EntityId),
    #[error(transparent)]
    Transport(TransportError),
}

impl WikidataError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, WikidataError::EndpointUnavailable { .. })
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

#[derive(Deserialize)]
struct SparqlResults {
    results: SparqlBindings,
}

#[derive(Deserialize)]
struct SparqlBindings {
    bindings: Vec<HashMap<String, SparqlTerm>>,
}

#[derive(Deserialize)]
struct SparqlTerm {
    #[serde(rename = "type")]
    kind: String,
    value: String,
}

/// Wikidata SPARQL and API client. All requests go through the supplied
/// transport behind an in-flight limit.
pub struct WikidataClient {
    transport: Arc<dyn Transport>,
    sparql_endpoint: String,
    api_endpoint: String,
}

impl WikidataClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self::with_endpoints(transport, DEFAULT_SPARQL_ENDPOINT, DEFAULT_API_ENDPOINT, DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_endpoints(
        transport: Arc<dyn Transport>,
        sparql_endpoint: impl Into<String>,
        api_endpoint: impl Into<String>,
        max_in_flight: usize,
    ) -> Self {
        Self {
            transport: Arc::new(LimitedTransport::new(transport, max_in_flight)),
            sparql_endpoint: sparql_endpoint.into(),
            api_endpoint: api_endpoint.into(),
        }
    }

    pub fn sparql_endpoint(&self) -> &str {
        &self.sparql_endpoint
    }

    pub fn unsourced_statements_query(entity: EntityId) -> String {
        let id = entity.to_string();
        template::render(UNSOURCED_QUERY, &[("ENTITY", &id)]).expect("bundled query template is complete")
    }

    pub fn constrained_properties_query(property_ids: &BTreeSet<String>) -> String {
        let values: Vec<String> = property_ids.iter().map(|p| format!("wd:{p}")).collect();
        template::render(CONSTRAINT_QUERY, &[("PROPERTIES", &values.join(" "))])
            .expect("bundled query template is complete")
    }

    fn sparql_request(&self, query: &str) -> HttpRequest {
        HttpRequest::get(&self.sparql_endpoint)
            .query("query", query)
            .query("format", "json")
            .header("Accept", "application/sparql-results+json")
    }

    fn send(&self, request: &HttpRequest, endpoint: &str) -> Result<HttpResponse, WikidataError> {
        let response = self.transport.send(request).map_err(|e| match e {
            TransportError::Timeout { .. } | TransportError::Connection { .. } => {
                WikidataError::EndpointUnavailable { endpoint: endpoint.to_string(), reason: e.to_string() }
            }
            other => WikidataError::Transport(other),
        })?;
        if response.status == 429 || response.status >= 500 {
            return Err(WikidataError::EndpointUnavailable {
                endpoint: endpoint.to_string(),
                reason: format!("HTTP {}", response.status),
            });
        }
        if !response.is_success() {
            return Err(WikidataError::MalformedResponse {
                endpoint: endpoint.to_string(),
                reason: format!("HTTP {}", response.status),
                excerpt: excerpt(&response.text()),
            });
        }
        Ok(response)
    }

    fn select(&self, query: &str) -> Result<Vec<HashMap<String, SparqlTerm>>, WikidataError> {
        let response = self.send(&self.sparql_request(query), &self.sparql_endpoint)?;
        let body = response.text();
        let parsed: SparqlResults = serde_json::from_str(&body).map_err(|e| WikidataError::MalformedResponse {
            endpoint: self.sparql_endpoint.clone(),
            reason: e.to_string(),
            excerpt: excerpt(&body),
        })?;
        Ok(parsed.results.bindings)
    }

    /// All direct statements about `entity` that carry no reference.
    /// `mandatory_reference` is false on every returned item until
    /// [`filter_mandatory_reference`](Self::filter_mandatory_reference) runs.
    pub fn fetch_unsourced_statements(&self, entity: EntityId) -> Result<Vec<UnsourcedStatement>, WikidataError> {
        let rows = self.select(&Self::unsourced_statements_query(entity))?;
        let malformed = |reason: String| WikidataError::MalformedResponse {
            endpoint: self.sparql_endpoint.clone(),
            reason,
            excerpt: String::new(),
        };
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let get = |name: &str| row.get(name).map(|t| t.value.as_str());
            let statement_uri = get("statement").ok_or_else(|| malformed("binding without ?statement".into()))?;
            let property_uri = get("property").ok_or_else(|| malformed("binding without ?property".into()))?;
            let value = row.get("value").ok_or_else(|| malformed("binding without ?value".into()))?;
            let property_id = property_uri.rsplit('/').next().unwrap_or(property_uri).to_string();
            let subject_label = get("subjectLabel").unwrap_or_default().to_string();
            let subject_label = if subject_label.trim().is_empty() { entity.to_string() } else { subject_label };
            let predicate_label = get("propertyLabel").unwrap_or(&property_id).to_string();
            let object_label = get("valueLabel").unwrap_or(&value.value).to_string();
            let object_id = (value.kind == "uri")
                .then(|| value.value.strip_prefix(ENTITY_PREFIX).map(str::to_string))
                .flatten();
            let statement = Statement::new(subject_label, predicate_label, object_label)
                .map_err(|e| malformed(format!("statement {statement_uri}: {e}")))?
                .with_ids(Some(entity.to_string()), Some(property_id), object_id);
            out.push(UnsourcedStatement {
                statement,
                mandatory_reference: false,
                statement_uri: statement_uri.to_string(),
            });
        }
        Ok(out)
    }

    /// Keeps statements whose predicate declares a citation-needed constraint,
    /// preserving order. The constraint lookup is a second SPARQL query.
    pub fn filter_mandatory_reference(
        &self,
        statements: Vec<UnsourcedStatement>,
    ) -> Result<Vec<UnsourcedStatement>, WikidataError> {
        let properties: BTreeSet<String> =
            statements.iter().filter_map(|s| s.statement.predicate_id.clone()).collect();
        if properties.is_empty() {
            return Ok(Vec::new());
        }
        let rows = self.select(&Self::constrained_properties_query(&properties))?;
        let constrained: BTreeSet<String> = rows
            .iter()
            .filter_map(|row| row.get("property"))
            .map(|t| t.value.rsplit('/').next().unwrap_or(&t.value).to_string())
            .collect();
        Ok(statements
            .into_iter()
            .filter(|s| s.statement.predicate_id.as_ref().is_some_and(|p| constrained.contains(p)))
            .map(|mut s| {
                s.mandatory_reference = true;
                s
            })
            .collect())
    }

    /// Unsourced statements of `entity` whose predicate requires a reference.
    pub fn unsourced_mandatory_statements(&self, entity: EntityId) -> Result<Vec<UnsourcedStatement>, WikidataError> {
        let all = self.fetch_unsourced_statements(entity)?;
        self.filter_mandatory_reference(all)
    }

    pub fn entity_info(&self, entity: EntityId) -> Result<EntityInfo, WikidataError> {
        let id = entity.to_string();
        let request = HttpRequest::get(&self.api_endpoint)
            .query("action", "wbgetentities")
            .query("ids", &id)
            .query("props", "info|labels|sitelinks/urls")
            .query("languages", "en")
            .query("sitefilter", "enwiki")
            .query("format", "json");
        let body = self.send(&request, &self.api_endpoint)?.text();
        let malformed = |reason: String| WikidataError::MalformedResponse {
            endpoint: self.api_endpoint.clone(),
            reason,
            excerpt: excerpt(&body),
        };
        let json: serde_json::Value = serde_json::from_str(&body).map_err(|e| malformed(e.to_string()))?;
        let item = json
            .get("entities")
            .and_then(|e| e.get(&id))
            .ok_or_else(|| malformed(format!("no entry for {id}")))?;
        if item.get("missing").is_some() {
            return Err(WikidataError::UnknownEntity(entity));
        }
        let enwiki = item.get("sitelinks").and_then(|s| s.get("enwiki"));
        let str_at = |v: Option<&serde_json::Value>, key: &str| {
            v.and_then(|v| v.get(key)).and_then(|v| v.as_str()).map(str::to_string)
        };
        Ok(EntityInfo {
            id: entity,
            label: str_at(item.get("labels").and_then(|l| l.get("en")), "value"),
            last_revision: item.get("lastrevid").and_then(|v| v.as_u64()),
            enwiki_title: str_at(enwiki, "title"),
            enwiki_url: str_at(enwiki, "url"),
        })
    }

    pub fn resolve_wikipedia_url(&self, entity: EntityId) -> Result<String, WikidataError> {
        self.entity_info(entity)?.enwiki_url.ok_or(WikidataError::NoSitelink(entity))
    }
}
