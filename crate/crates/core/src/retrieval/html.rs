use std::sync::LazyLock;

use regex::Regex;
use scraper::{ElementRef, Html, Selector};

const TOOLBAR_BEGIN: &str = "<!-- BEGIN WAYBACK TOOLBAR INSERT -->";
const TOOLBAR_END: &str = "<!-- END WAYBACK TOOLBAR INSERT -->";

static PARAGRAPH: LazyLock<Selector> = LazyLock::new(|| Selector::parse("p").expect("static selector"));
static REVISION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#""wgRevisionId"\s*:\s*(\d+)"#).expect("static regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedParagraph {
    /// Text content with whitespace runs collapsed to single spaces.
    pub text: String,
    /// Inner HTML of the paragraph element, kept for citation markers.
    pub html: String,
}

pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn inside_archive_chrome(element: &ElementRef<'_>) -> bool {
    element.ancestors().filter_map(ElementRef::wrap).any(|a| {
        a.value().id().is_some_and(|id| id.starts_with("wm-ipp") || id == "donato")
    })
}

/// Text of every `<p>` element in document order. Empty paragraphs are dropped.
pub fn extract_paragraphs(html: &str) -> Vec<ExtractedParagraph> {
    let document = Html::parse_document(html);
    document
        .select(&PARAGRAPH)
        .filter(|p| !inside_archive_chrome(p))
        .filter_map(|p| {
            let text = collapse_whitespace(&p.text().collect::<String>());
            (!text.is_empty()).then(|| ExtractedParagraph { text, html: p.inner_html() })
        })
        .collect()
}

/// Removes the toolbar block the Web Archive injects into archived pages.
pub fn strip_archive_toolbar(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut rest = html;
    while let Some(start) = rest.find(TOOLBAR_BEGIN) {
        out.push_str(&rest[..start]);
        match rest[start..].find(TOOLBAR_END) {
            Some(end) => rest = &rest[start + end + TOOLBAR_END.len()..],
            None => {
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);
    out
}

/// MediaWiki revision id embedded in the page configuration script.
pub fn revision_id(html: &str) -> Option<u64> {
    REVISION.captures(html).and_then(|c| c[1].parse().ok())
}
