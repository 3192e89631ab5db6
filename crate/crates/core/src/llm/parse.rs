//! Reading option letters, NLI labels and justifications out of free-text
//! completions.
//!
//! Letters are searched in three tiers and the first tier with any match
//! decides:
//!
//! 1. explicit declarations (`the correct answer is: a)`, `label is:c)`,
//!    `I would choose option b)`), requiring closing punctuation after the
//!    letter so that the article "a" never counts;
//! 2. a bare letter opening the first non-empty line (`a) The RDF ...`);
//! 3. `option x` anywhere, or a letter opening any line.
//!
//! Two different letters within the deciding tier make the answer ambiguous.

use std::sync::LazyLock;

use regex::Regex;

use crate::model::{NliClass, NliLabel, Verdict};
use crate::prompting::rdf_option_texts;

const LETTER_END: &str = r"(?:\s*[\)\]]|[.:,;!]|\s*$|\s+[-–—]|\s+(?:entailment|neutral|contradiction)\b)";

static DECLARATIONS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"\b(?:answer|label|choice|response|option)\s+(?:is|would\s+be|should\s+be|will\s+be|must\s+be)\s*:?\s*",
        r"\b(?:answer|label|choice|response)\s*[:=]\s*",
        r"\b(?:choose|chose|select|pick|opt\s+for|go\s+with)\s+",
    ]
    .iter()
    .map(|lead| Regex::new(&format!(r"(?im){lead}(?:option\s+)?[\(\[]?([abc]){LETTER_END}")).expect("static regex"))
    .collect()
});

/// An alternative letter offered right after a declared one: `a) or b)`.
static ALTERNATIVE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:or|and/or|/)\s*(?:option\s+)?[\(\[]?([abc])[\)\]]").expect("static regex")
});

static LEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:option\s+)?[\(\[]?([abc])(?:\s*[\)\]]|[.:](?:\s|$)|\s*$)").expect("static regex")
});

static LOOSE: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [r"(?im)\boption\s+[\(\[]?([abc])\b", r"(?im)^\s*[\(\[]?([abc])[\)\]]"]
        .iter()
        .map(|p| Regex::new(p).expect("static regex"))
        .collect()
});

static NLI_WORD_DECLARATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?i)\b(?:answer|label|choice|response|relationship|relation|classification)\b(?:\s+(?:is|would\s+be|should\s+be))?\s*[:\-]?\s*["'“]?(entailment|neutral|contradiction)\b"#,
    )
    .expect("static regex")
});

static NLI_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(entailment|neutral|contradiction)\b").expect("static regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Declaration,
    LeadingLine,
    Loose,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptionDetection {
    Found {
        letter: char,
        tier: Tier,
        /// Byte offset just past the letter and its closing punctuation,
        /// for the first match.
        end: usize,
        /// Byte offset where the first match starts.
        start: usize,
    },
    Ambiguous(Vec<char>),
    Absent,
}

/// Markdown emphasis is blanked byte-for-byte so offsets stay valid.
fn normalize(raw: &str) -> String {
    raw.chars().map(|c| if c == '*' || c == '`' { ' ' } else { c }).collect()
}

fn decide(mut hits: Vec<(usize, usize, char)>, tier: Tier) -> Option<OptionDetection> {
    if hits.is_empty() {
        return None;
    }
    hits.sort();
    let mut letters: Vec<char> = hits.iter().map(|h| h.2).collect();
    letters.sort();
    letters.dedup();
    if letters.len() > 1 {
        return Some(OptionDetection::Ambiguous(letters));
    }
    let (start, end, letter) = hits[0];
    Some(OptionDetection::Found { letter, tier, start, end })
}

fn collect(patterns: &[Regex], text: &str) -> Vec<(usize, usize, char)> {
    let mut hits = Vec::new();
    for re in patterns {
        for caps in re.captures_iter(text) {
            let whole = caps.get(0).expect("match");
            let letter = caps[1].chars().next().expect("letter").to_ascii_lowercase();
            hits.push((whole.start(), whole.end(), letter));
        }
    }
    hits
}

pub fn detect_option(raw: &str) -> OptionDetection {
    let text = normalize(raw);
    let mut declared = collect(&DECLARATIONS, &text);
    let alternatives: Vec<_> = declared
        .iter()
        .filter_map(|&(_, end, _)| {
            let caps = ALTERNATIVE.captures(&text[end..])?;
            let whole = caps.get(0).expect("match");
            Some((end + whole.start(), end + whole.end(), caps[1].chars().next()?.to_ascii_lowercase()))
        })
        .collect();
    declared.extend(alternatives);
    if let Some(d) = decide(declared, Tier::Declaration) {
        return d;
    }
    let first_line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if let Some(caps) = LEADING.captures(first_line) {
        let offset = first_line.as_ptr() as usize - text.as_ptr() as usize;
        let whole = caps.get(0).expect("match");
        let letter = caps[1].chars().next().expect("letter").to_ascii_lowercase();
        return OptionDetection::Found {
            letter,
            tier: Tier::LeadingLine,
            start: offset + whole.start(),
            end: offset + whole.end(),
        };
    }
    decide(collect(&LOOSE, &text), Tier::Loose).unwrap_or(OptionDetection::Absent)
}

pub fn parse_option(raw: &str) -> Verdict {
    match detect_option(raw) {
        OptionDetection::Found { letter: 'a', .. } => Verdict::DirectProof,
        OptionDetection::Found { letter: 'b', .. } => Verdict::Indication,
        OptionDetection::Found { letter: 'c', .. } => Verdict::NoSupport,
        _ => Verdict::Unparseable { raw: raw.to_string() },
    }
}

fn class_for_letter(letter: char) -> Option<NliClass> {
    NliClass::ALL.into_iter().find(|c| c.option_letter() == letter)
}

pub fn parse_nli_label(raw: &str) -> NliLabel {
    match detect_option(raw) {
        OptionDetection::Found { letter, .. } => {
            return class_for_letter(letter).map(NliLabel::Class).unwrap_or(NliLabel::Unparseable)
        }
        OptionDetection::Ambiguous(_) => return NliLabel::Unparseable,
        OptionDetection::Absent => {}
    }
    let text = normalize(raw);
    let distinct = |re: &Regex| {
        let mut classes: Vec<NliClass> =
            re.captures_iter(&text).filter_map(|c| NliClass::from_name(&c[1])).collect();
        classes.sort();
        classes.dedup();
        classes
    };
    for re in [&*NLI_WORD_DECLARATION, &*NLI_WORD] {
        match distinct(re).as_slice() {
            [one] => return NliLabel::Class(*one),
            [] => continue,
            _ => return NliLabel::Unparseable,
        }
    }
    NliLabel::Unparseable
}

/// Strips `prefix` from the start of `text`, ignoring case, whitespace and
/// markdown emphasis. Returns the remainder on a full match.
fn strip_echo<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let mut wanted = prefix.chars().filter(|c| !c.is_whitespace()).flat_map(char::to_lowercase).peekable();
    let mut iter = text.char_indices();
    let mut consumed = 0;
    while wanted.peek().is_some() {
        let (idx, c) = iter.next()?;
        consumed = idx + c.len_utf8();
        if c.is_whitespace() || c == '*' {
            continue;
        }
        if c.to_lowercase().ne(std::iter::once(*wanted.peek()?).flat_map(char::to_lowercase)) {
            return None;
        }
        wanted.next();
    }
    let rest = &text[consumed..];
    Some(rest.trim_start_matches('*'))
}

/// The model's stated reasoning: the text after the option declaration with
/// any echoed option wording removed. When the declaration does not open the
/// response the whole response is the justification.
pub fn extract_justification(raw: &str) -> String {
    let (letter, start, end) = match detect_option(raw) {
        OptionDetection::Found { letter, start, end, tier: Tier::Declaration | Tier::LeadingLine } => (letter, start, end),
        _ => return raw.trim().to_string(),
    };
    let lead = raw.len() - raw.trim_start().len();
    let first_line_end = raw[lead..].find('\n').map(|i| i + lead).unwrap_or(raw.len());
    if start >= first_line_end {
        return raw.trim().to_string();
    }
    let mut rest = raw[end..].trim_start();
    if let Some((_, text)) = rdf_option_texts().into_iter().find(|(l, _)| *l == letter) {
        if let Some(after) = strip_echo(rest, text) {
            rest = after;
        }
    }
    if let Some(class) = class_for_letter(letter) {
        if let Some(after) = strip_echo(rest, class.name()) {
            if after.is_empty() || after.starts_with(|c: char| !c.is_alphanumeric()) {
                rest = after;
            }
        }
    }
    rest.trim_start_matches(|c: char| c.is_whitespace() || c == '.' || c == ':').trim_end().to_string()
}
