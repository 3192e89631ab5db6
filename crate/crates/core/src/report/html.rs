use std::fmt::Write as _;

use super::xml::{parse_report, Report, ReportSummary};
use super::ReportError;
use crate::model::Verdict;
use crate::verifier::{DocumentRecord, VerificationSession};

const STYLE: &str = "body{font-family:sans-serif;max-width:60em;margin:2em auto}\
table{border-collapse:collapse;margin:1em 0;width:100%}\
th,td{border:1px solid #999;padding:.3em .5em;text-align:left;vertical-align:top}\
th{background:#eee}.outcome{font-weight:bold}";

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn link(url: &str) -> String {
    format!("<a href=\"{0}\">{0}</a>", esc(url))
}

fn row(out: &mut String, label: &str, value_html: &str) {
    let _ = writeln!(out, "<tr><td>{label}</td><td>{value_html}</td></tr>");
}

fn summary_rows(s: &ReportSummary) -> Vec<(&'static str, String)> {
    let mut rows = vec![
        ("LLM used:", esc(&s.llm_model)),
        ("Date of testing:", s.date.format("%Y-%m-%d").to_string()),
        ("Time of testing:", s.time.format("%H:%M:%S").to_string()),
        ("Duration (minutes):", format!("{} minutes", s.duration_minutes)),
        ("Duration (seconds):", format!("{} seconds", s.duration_seconds)),
        ("Subject ID:", s.subject_id.to_string()),
        ("Subject name:", esc(&s.subject_name)),
        ("Subject URL:", link(&s.subject_url)),
        ("Subject Permalink:", link(&s.subject_permalink)),
    ];
    if let Some(u) = &s.wikipedia_url {
        rows.push(("Wikipedia URL:", link(u)));
    }
    if let Some(u) = &s.wikipedia_permalink {
        rows.push(("Wikipedia Permalink:", link(u)));
    }
    rows.push(("Wikidata Endpoint:", link(&s.endpoint)));
    rows
}

fn document_outcome(d: &DocumentRecord) -> String {
    match (&d.skip, d.confirmed_paragraph) {
        (Some(skip), _) => format!("skipped: {}", esc(&skip.reason)),
        (None, Some(p)) => format!("supported by paragraph {p}"),
        (None, None) => format!("no support in {} of {} paragraphs", d.paragraphs_queried, d.valid_paragraphs),
    }
}

fn write_session(out: &mut String, s: &VerificationSession) {
    let st = &s.statement;
    out.push_str("<section class=\"session\">\n");
    let _ = writeln!(
        out,
        "<h2>Verification trace for \u{201c}&lt;{}&gt; &lt;{}&gt; &lt;{}&gt;\u{201d}</h2>",
        esc(&st.subject_label),
        esc(&st.predicate_label),
        esc(&st.object_label)
    );
    let outcome = match s.traces.len() {
        0 => "No supporting paragraph found.".to_string(),
        n => format!("Supported by {n} source paragraph(s)."),
    };
    let _ = writeln!(out, "<p class=\"outcome\">{outcome}</p>");
    if !s.documents.is_empty() {
        out.push_str("<table class=\"documents\">\n<tr><th>#</th><th>Document</th><th>Retrieved</th><th>Outcome</th></tr>\n");
        for (i, d) in s.documents.iter().enumerate() {
            let number = d.rank.map(|r| r.to_string()).or(d.ref_number.map(|r| format!("[{r}]"))).unwrap_or((i + 1).to_string());
            let source = d.retrieval_source.map(|r| r.code()).unwrap_or("-");
            let _ = writeln!(out, "<tr><td>{number}</td><td>{}</td><td>{source}</td><td>{}</td></tr>", link(&d.url), document_outcome(d));
        }
        out.push_str("</table>\n");
    }
    if !s.skips.is_empty() {
        out.push_str("<ul class=\"skips\">\n");
        for skip in &s.skips {
            let _ = writeln!(out, "<li>{}: {}</li>", esc(&skip.reason), esc(&skip.detail));
        }
        out.push_str("</ul>\n");
    }
    for t in &s.traces {
        out.push_str("<table class=\"trace\">\n<tr><th>Attribute</th><th>Value</th></tr>\n");
        row(out, "Source document", &link(&t.document_url));
        if let Some(a) = &t.archive_url {
            row(out, "Archived copy", &link(a));
        }
        row(out, "Paragraph number", &t.paragraph_index.to_string());
        row(out, "Content of paragraph received from the source", &esc(&t.paragraph_text));
        row(out, "Answer of the LLM", &esc(&t.justification));
        row(out, "Verdict", t.verdict.code());
        let verdict_line = if t.verdict == Verdict::DirectProof {
            "Yes, the LLM judged that this paragraph supports the statement."
        } else {
            "No, the LLM did not find direct support in this paragraph."
        };
        row(out, "Match found in source?", verdict_line);
        out.push_str("</table>\n");
    }
    out.push_str("</section>\n");
}

pub fn render_report(report: &Report) -> String {
    let name = esc(&report.summary.subject_name);
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>Verification report for {name}</title>");
    let _ = writeln!(out, "<style>{STYLE}</style>");
    out.push_str("</head>\n<body>\n");
    let _ = writeln!(out, "<h1>Verification report for {name}</h1>");
    out.push_str("<table class=\"summary\">\n<tr><th>Attribute</th><th>Value</th></tr>\n");
    for (label, value) in summary_rows(&report.summary) {
        row(&mut out, label, &value);
    }
    out.push_str("</table>\n");
    for s in &report.sessions {
        write_session(&mut out, s);
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// Renders schema-valid report XML as a standalone HTML page, following the
/// bundled stylesheet.
pub fn render_html(xml: &str) -> Result<String, ReportError> {
    super::schema::validate_report(xml).map_err(|e| ReportError::TransformFailure(e.to_string()))?;
    let report = parse_report(xml).map_err(|e| ReportError::TransformFailure(e.to_string()))?;
    Ok(render_report(&report))
}
