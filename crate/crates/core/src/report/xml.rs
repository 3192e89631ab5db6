use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveTime, Timelike as _, Utc};
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use super::{ReportError, REPORT_NAMESPACE, SCHEMA_VERSION};
use crate::model::{EvidenceTrace, RetrievalSource, Statement, Verdict};
use crate::verifier::{DocumentRecord, IntermediateMatch, SkipRecord, VerificationMode, VerificationSession};
use crate::wikidata::EntityInfo;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub llm_model: String,
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub duration_minutes: u64,
    pub duration_seconds: u64,
    pub subject_id: u64,
    pub subject_name: String,
    pub subject_url: String,
    pub subject_permalink: String,
    pub wikipedia_url: Option<String>,
    pub wikipedia_permalink: Option<String>,
    pub endpoint: String,
}

/// Revision-pinned link to an English Wikipedia article.
pub fn wikipedia_permalink(title: &str, revision: u64) -> String {
    let title: String = url::form_urlencoded::byte_serialize(title.replace(' ', "_").as_bytes()).collect();
    format!("https://en.wikipedia.org/w/index.php?title={title}&oldid={revision}")
}

impl ReportSummary {
    /// Summary of a run over one subject. Fails when the entity has no
    /// known revision, since the permalink must pin one.
    pub fn for_run(
        llm_model: &str,
        started: DateTime<Utc>,
        ended: DateTime<Utc>,
        entity: &EntityInfo,
        wikipedia_revision: Option<u64>,
        endpoint: &str,
    ) -> Result<Self, ReportError> {
        let subject_permalink = entity
            .permalink()
            .ok_or_else(|| ReportError::Incomplete(format!("no revision known for {}", entity.id)))?;
        let elapsed = (ended - started).num_seconds().max(0) as u64;
        let wikipedia_permalink = match (&entity.enwiki_title, wikipedia_revision) {
            (Some(title), Some(rev)) => Some(wikipedia_permalink(title, rev)),
            _ => None,
        };
        Ok(Self {
            llm_model: llm_model.to_string(),
            date: started.date_naive(),
            time: started.time().with_nanosecond(0).unwrap_or(started.time()),
            duration_minutes: elapsed / 60,
            duration_seconds: elapsed % 60,
            subject_id: entity.id.numeric(),
            subject_name: entity.label.clone().unwrap_or_else(|| entity.id.to_string()),
            subject_url: entity.id.entity_url(),
            subject_permalink,
            wikipedia_url: entity.enwiki_url.clone(),
            wikipedia_permalink,
            endpoint: endpoint.to_string(),
        })
    }
}

/// A report as read back from XML.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub schema_version: String,
    pub summary: ReportSummary,
    pub sessions: Vec<VerificationSession>,
}

fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

/// Escapes character data. Carriage returns are written as references so
/// parsers do not fold them; characters XML cannot carry become U+FFFD.
pub fn escape_text(s: &str) -> String {
    escape(s, false)
}

pub fn escape_attr(s: &str) -> String {
    escape(s, true)
}

fn escape(s: &str, attr: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            '"' if attr => out.push_str("&quot;"),
            '\n' if attr => out.push_str("&#10;"),
            '\t' if attr => out.push_str("&#9;"),
            c if !is_xml_char(c) => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn attrs(attrs: &[(&str, Option<String>)]) -> String {
        let mut s = String::new();
        for (k, v) in attrs {
            if let Some(v) = v {
                let _ = write!(s, " {k}=\"{}\"", escape_attr(v));
            }
        }
        s
    }

    fn leaf(&mut self, name: &str, attrs: &[(&str, Option<String>)], text: &str) {
        self.indent();
        let _ = writeln!(self.out, "<{name}{}>{}</{name}>", Self::attrs(attrs), escape_text(text));
    }

    fn empty(&mut self, name: &str, attrs: &[(&str, Option<String>)]) {
        self.indent();
        let _ = writeln!(self.out, "<{name}{}/>", Self::attrs(attrs));
    }

    fn open(&mut self, name: &str, attrs: &[(&str, Option<String>)]) {
        self.indent();
        let _ = writeln!(self.out, "<{name}{}>", Self::attrs(attrs));
        self.depth += 1;
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.out, "</{name}>");
    }
}

fn some(v: impl ToString) -> Option<String> {
    Some(v.to_string())
}

fn ts(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

fn write_skip(w: &mut Writer, skip: &SkipRecord) {
    w.leaf(
        "skip",
        &[("reason", some(&skip.reason)), ("url", skip.url.clone()), ("refNumber", skip.ref_number.map(|n| n.to_string()))],
        &skip.detail,
    );
}

fn write_session(w: &mut Writer, s: &VerificationSession) {
    w.open(
        "session",
        &[
            ("mode", some(s.mode.code())),
            ("confirmed", some(s.is_confirmed())),
            ("interrupted", some(s.interrupted)),
            ("startedAt", Some(ts(&s.started_at))),
            ("endedAt", Some(ts(&s.ended_at))),
            ("documentsExamined", some(s.documents_examined)),
            ("paragraphsQueried", some(s.paragraphs_queried)),
            ("llmCalls", some(s.llm_calls)),
        ],
    );
    let st = &s.statement;
    w.open("statement", &[("domainTag", st.domain_tag.clone())]);
    w.leaf("subject", &[("id", st.subject_id.clone())], &st.subject_label);
    w.leaf("predicate", &[("id", st.predicate_id.clone())], &st.predicate_label);
    w.leaf("object", &[("id", st.object_id.clone())], &st.object_label);
    w.close("statement");
    if let Some(q) = &s.search_query {
        w.leaf("searchQuery", &[], q);
    }
    if let Some(url) = &s.article_url {
        w.empty("article", &[("url", some(url)), ("revision", s.article_revision.map(|r| r.to_string()))]);
    }
    for d in &s.documents {
        let attrs = [
            ("url", some(&d.url)),
            ("rank", d.rank.map(|n| n.to_string())),
            ("refNumber", d.ref_number.map(|n| n.to_string())),
            ("retrievalSource", d.retrieval_source.map(|r| r.code().to_string())),
            ("archiveUrl", d.archive_url.clone()),
            ("validParagraphs", some(d.valid_paragraphs)),
            ("paragraphsQueried", some(d.paragraphs_queried)),
            ("confirmedParagraph", d.confirmed_paragraph.map(|n| n.to_string())),
        ];
        match &d.skip {
            Some(skip) => {
                w.open("document", &attrs);
                write_skip(w, skip);
                w.close("document");
            }
            None => w.empty("document", &attrs),
        }
    }
    for skip in &s.skips {
        write_skip(w, skip);
    }
    for m in &s.intermediate {
        let refs = m.ref_numbers.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        w.open(
            "intermediateMatch",
            &[("chunkIndex", some(m.chunk_index)), ("paragraphIndex", some(m.paragraph_index)), ("refNumbers", Some(refs))],
        );
        w.leaf("paragraph", &[], &m.paragraph_text);
        w.close("intermediateMatch");
    }
    for t in &s.traces {
        w.open(
            "trace",
            &[
                ("documentUrl", some(&t.document_url)),
                ("retrievalSource", some(t.retrieval_source.code())),
                ("archiveUrl", t.archive_url.clone()),
                ("paragraphIndex", some(t.paragraph_index)),
                ("verdict", some(t.verdict.code())),
                ("llmModel", some(&t.llm_model)),
                ("timestamp", Some(ts(&t.timestamp))),
                ("durationMs", some(t.duration_ms)),
            ],
        );
        w.leaf("paragraph", &[], &t.paragraph_text);
        w.leaf("justification", &[], &t.justification);
        if let Verdict::Unparseable { raw } = &t.verdict {
            w.leaf("rawAnswer", &[], raw);
        }
        w.close("trace");
    }
    w.close("session");
}

/// Serializes sessions with their run summary and validates the result
/// against the bundled schema.
pub fn build_trace_xml(sessions: &[VerificationSession], summary: &ReportSummary) -> Result<String, ReportError> {
    let mut w = Writer { out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"), depth: 0 };
    w.open("verificationReport", &[("xmlns", some(REPORT_NAMESPACE)), ("schemaVersion", some(SCHEMA_VERSION))]);
    w.open("summary", &[]);
    w.leaf("llmModel", &[], &summary.llm_model);
    w.leaf("date", &[], &summary.date.format("%Y-%m-%d").to_string());
    w.leaf("time", &[], &summary.time.format("%H:%M:%S").to_string());
    w.leaf("durationMinutes", &[], &summary.duration_minutes.to_string());
    w.leaf("durationSeconds", &[], &summary.duration_seconds.to_string());
    w.leaf("subjectId", &[], &summary.subject_id.to_string());
    w.leaf("subjectName", &[], &summary.subject_name);
    w.leaf("subjectUrl", &[], &summary.subject_url);
    w.leaf("subjectPermalink", &[], &summary.subject_permalink);
    if let Some(u) = &summary.wikipedia_url {
        w.leaf("wikipediaUrl", &[], u);
    }
    if let Some(u) = &summary.wikipedia_permalink {
        w.leaf("wikipediaPermalink", &[], u);
    }
    w.leaf("endpoint", &[], &summary.endpoint);
    w.close("summary");
    for s in sessions {
        write_session(&mut w, s);
    }
    w.close("verificationReport");
    let xml = w.out;
    super::schema::validate_report(&xml)?;
    Ok(xml)
}

// Parse-back.

fn malformed(msg: impl Into<String>) -> ReportError {
    ReportError::Malformed(msg.into())
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(Node::is_element)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    elements(node).find(|n| n.tag_name().name() == name)
}

fn text_of(node: Node<'_, '_>) -> String {
    node.children().filter(|n| n.is_text()).filter_map(|n| n.text()).collect()
}

fn child_text(node: Node<'_, '_>, name: &str) -> Result<String, ReportError> {
    child(node, name).map(text_of).ok_or_else(|| malformed(format!("missing <{name}>")))
}

fn attr<T: FromStr>(node: Node<'_, '_>, name: &str) -> Result<Option<T>, ReportError> {
    node.attribute(name)
        .map(|v| v.parse::<T>().map_err(|_| malformed(format!("bad {name}={v:?} on <{}>", node.tag_name().name()))))
        .transpose()
}

fn req<T: FromStr>(node: Node<'_, '_>, name: &str) -> Result<T, ReportError> {
    attr(node, name)?.ok_or_else(|| malformed(format!("missing {name} on <{}>", node.tag_name().name())))
}

fn time_attr(node: Node<'_, '_>, name: &str) -> Result<DateTime<Utc>, ReportError> {
    let raw: String = req(node, name)?;
    DateTime::parse_from_rfc3339(&raw).map(|t| t.with_timezone(&Utc)).map_err(|e| malformed(format!("{name}: {e}")))
}

fn source_attr(node: Node<'_, '_>) -> Result<Option<RetrievalSource>, ReportError> {
    node.attribute("retrievalSource")
        .map(|c| RetrievalSource::from_code(c).ok_or_else(|| malformed(format!("unknown retrieval source {c}"))))
        .transpose()
}

fn read_skip(node: Node<'_, '_>) -> Result<SkipRecord, ReportError> {
    Ok(SkipRecord {
        reason: req(node, "reason")?,
        url: attr(node, "url")?,
        ref_number: attr(node, "refNumber")?,
        detail: text_of(node),
    })
}

fn read_verdict(code: &str, trace: Node<'_, '_>) -> Result<Verdict, ReportError> {
    Ok(match code {
        "directProof" => Verdict::DirectProof,
        "indication" => Verdict::Indication,
        "noSupport" => Verdict::NoSupport,
        "unparseable" => Verdict::Unparseable { raw: child(trace, "rawAnswer").map(text_of).unwrap_or_default() },
        other => return Err(malformed(format!("unknown verdict {other}"))),
    })
}

fn read_session(node: Node<'_, '_>) -> Result<VerificationSession, ReportError> {
    let st = child(node, "statement").ok_or_else(|| malformed("missing <statement>"))?;
    let part = |name: &str| -> Result<(String, Option<String>), ReportError> {
        let n = child(st, name).ok_or_else(|| malformed(format!("missing <{name}>")))?;
        Ok((text_of(n), n.attribute("id").map(str::to_string)))
    };
    let ((s, sid), (p, pid), (o, oid)) = (part("subject")?, part("predicate")?, part("object")?);
    let mut statement = Statement::new(s, p, o).map_err(|e| malformed(e.to_string()))?;
    statement.subject_id = sid;
    statement.predicate_id = pid;
    statement.object_id = oid;
    statement.domain_tag = st.attribute("domainTag").map(str::to_string);

    let mode = match node.attribute("mode") {
        Some("webSearch") => VerificationMode::WebSearch,
        Some("wikipedia") => VerificationMode::Wikipedia,
        other => return Err(malformed(format!("unknown mode {other:?}"))),
    };
    let article = child(node, "article");
    let mut session = VerificationSession {
        statement: statement.clone(),
        mode,
        traces: Vec::new(),
        documents: Vec::new(),
        skips: Vec::new(),
        intermediate: Vec::new(),
        search_query: child(node, "searchQuery").map(text_of),
        article_url: article.map(|a| req(a, "url")).transpose()?,
        article_revision: match article {
            Some(a) => attr(a, "revision")?,
            None => None,
        },
        documents_examined: req(node, "documentsExamined")?,
        paragraphs_queried: req(node, "paragraphsQueried")?,
        llm_calls: req(node, "llmCalls")?,
        interrupted: req(node, "interrupted")?,
        started_at: time_attr(node, "startedAt")?,
        ended_at: time_attr(node, "endedAt")?,
    };
    for n in elements(node) {
        match n.tag_name().name() {
            "document" => session.documents.push(DocumentRecord {
                url: req(n, "url")?,
                rank: attr(n, "rank")?,
                ref_number: attr(n, "refNumber")?,
                retrieval_source: source_attr(n)?,
                archive_url: attr(n, "archiveUrl")?,
                skip: child(n, "skip").map(read_skip).transpose()?,
                valid_paragraphs: req(n, "validParagraphs")?,
                paragraphs_queried: req(n, "paragraphsQueried")?,
                confirmed_paragraph: attr(n, "confirmedParagraph")?,
            }),
            "skip" => session.skips.push(read_skip(n)?),
            "intermediateMatch" => {
                let refs: String = req(n, "refNumbers")?;
                session.intermediate.push(IntermediateMatch {
                    chunk_index: req(n, "chunkIndex")?,
                    paragraph_index: req(n, "paragraphIndex")?,
                    paragraph_text: child_text(n, "paragraph")?,
                    ref_numbers: refs
                        .split_whitespace()
                        .map(|r| r.parse().map_err(|_| malformed(format!("bad reference number {r}"))))
                        .collect::<Result<_, _>>()?,
                });
            }
            "trace" => {
                let code: String = req(n, "verdict")?;
                session.traces.push(EvidenceTrace {
                    statement: statement.clone(),
                    document_url: req(n, "documentUrl")?,
                    retrieval_source: source_attr(n)?.ok_or_else(|| malformed("trace without retrievalSource"))?,
                    archive_url: attr(n, "archiveUrl")?,
                    paragraph_index: req(n, "paragraphIndex")?,
                    paragraph_text: child_text(n, "paragraph")?,
                    verdict: read_verdict(&code, n)?,
                    justification: child_text(n, "justification")?,
                    llm_model: req(n, "llmModel")?,
                    timestamp: time_attr(n, "timestamp")?,
                    duration_ms: req(n, "durationMs")?,
                });
            }
            _ => {}
        }
    }
    Ok(session)
}

fn read_summary(node: Node<'_, '_>) -> Result<ReportSummary, ReportError> {
    let parse_num = |name: &str| -> Result<u64, ReportError> {
        let t = child_text(node, name)?;
        t.trim().parse().map_err(|_| malformed(format!("bad <{name}> {t:?}")))
    };
    Ok(ReportSummary {
        llm_model: child_text(node, "llmModel")?,
        date: NaiveDate::parse_from_str(&child_text(node, "date")?, "%Y-%m-%d").map_err(|e| malformed(e.to_string()))?,
        time: NaiveTime::parse_from_str(&child_text(node, "time")?, "%H:%M:%S").map_err(|e| malformed(e.to_string()))?,
        duration_minutes: parse_num("durationMinutes")?,
        duration_seconds: parse_num("durationSeconds")?,
        subject_id: parse_num("subjectId")?,
        subject_name: child_text(node, "subjectName")?,
        subject_url: child_text(node, "subjectUrl")?,
        subject_permalink: child_text(node, "subjectPermalink")?,
        wikipedia_url: child(node, "wikipediaUrl").map(text_of),
        wikipedia_permalink: child(node, "wikipediaPermalink").map(text_of),
        endpoint: child_text(node, "endpoint")?,
    })
}

pub fn parse_report(xml: &str) -> Result<Report, ReportError> {
    let doc = Document::parse(xml).map_err(|e| malformed(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "verificationReport" || root.tag_name().namespace() != Some(REPORT_NAMESPACE) {
        return Err(malformed("root element is not a verification report"));
    }
    let summary = read_summary(child(root, "summary").ok_or_else(|| malformed("missing <summary>"))?)?;
    let sessions = elements(root)
        .filter(|n| n.tag_name().name() == "session")
        .map(read_session)
        .collect::<Result<_, _>>()?;
    Ok(Report { schema_version: req(root, "schemaVersion")?, summary, sessions })
}
