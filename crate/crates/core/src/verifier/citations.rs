use std::sync::LazyLock;

use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};

use crate::retrieval::html::collapse_whitespace;

static MARKER: LazyLock<Selector> = LazyLock::new(|| Selector::parse("sup.reference").expect("static selector"));
static REFLIST: LazyLock<Selector> = LazyLock::new(|| Selector::parse("ol.references").expect("static selector"));
static ITEM: LazyLock<Selector> = LazyLock::new(|| Selector::parse("li").expect("static selector"));
static REF_TEXT: LazyLock<Selector> = LazyLock::new(|| Selector::parse("span.reference-text").expect("static selector"));
static EXTERNAL: LazyLock<Selector> = LazyLock::new(|| Selector::parse("a.external").expect("static selector"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikipediaCitation {
    pub ref_number: u32,
    pub citation_text: String,
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationResolution {
    pub citations: Vec<WikipediaCitation>,
    /// Numbers with no entry in the reference list.
    pub dangling: Vec<u32>,
}

/// Distinct numeric citation markers (`[12]`) in order of appearance.
/// Lettered notes such as `[a]` are not references and are ignored.
pub fn extract_reference_numbers(paragraph_html: &str) -> Vec<u32> {
    let fragment = Html::parse_fragment(paragraph_html);
    let mut out = Vec::new();
    for marker in fragment.select(&MARKER) {
        let text: String = marker.text().collect();
        let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
        if let Ok(n) = inner.trim().parse::<u32>() {
            if n > 0 && !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

fn is_archive(url: &str) -> bool {
    url.contains("://web.archive.org/") || url.contains("://archive.org/wayback/")
}

fn citation_from_item(number: u32, item: ElementRef<'_>) -> WikipediaCitation {
    let body = item.select(&REF_TEXT).next().unwrap_or(item);
    let mut urls: Vec<String> = Vec::new();
    for link in body.select(&EXTERNAL) {
        if let Some(href) = link.value().attr("href") {
            let href = match href.strip_prefix("//") {
                Some(rest) => format!("https://{rest}"),
                None => href.to_string(),
            };
            if !urls.contains(&href) {
                urls.push(href);
            }
        }
    }
    // archived copies are reached through the fallback, not checked twice
    if urls.iter().any(|u| !is_archive(u)) {
        urls.retain(|u| !is_archive(u));
    }
    WikipediaCitation {
        ref_number: number,
        citation_text: collapse_whitespace(&body.text().collect::<String>()),
        urls,
    }
}

/// Resolves marker numbers against the article's main reference list, where
/// number `n` is the `n`-th entry.
pub fn resolve_citations(ref_numbers: &[u32], references_html: &str) -> CitationResolution {
    let document = Html::parse_document(references_html);
    let list = document.select(&REFLIST).find(|ol| {
        !ol.ancestors()
            .filter_map(ElementRef::wrap)
            .any(|a| a.value().classes().any(|c| c == "notelist"))
    });
    let items: Vec<ElementRef<'_>> = match list {
        Some(ol) => ol.select(&ITEM).filter(|li| li.parent().map(|p| p.id()) == Some(ol.id())).collect(),
        None => Vec::new(),
    };
    let mut resolution = CitationResolution::default();
    for &n in ref_numbers {
        match items.get((n as usize).wrapping_sub(1)) {
            Some(item) if n > 0 => resolution.citations.push(citation_from_item(n, *item)),
            _ => resolution.dangling.push(n),
        }
    }
    resolution
}
