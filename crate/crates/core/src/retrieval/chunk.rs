use serde::{Deserialize, Serialize};

pub const MIN_PARAGRAPH_CHARS: usize = 100;
pub const DEFAULT_CHUNK_CHARS: usize = 10_000;
pub const CHUNK_SEPARATOR: &str = "\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub paragraphs: Vec<String>,
    /// Characters (not bytes), separators included.
    pub char_length: usize,
    /// 0-based chunk position.
    pub index: usize,
    /// 0-based position of the first member within the input list.
    pub first_paragraph: usize,
}

impl Chunk {
    pub fn text(&self) -> String {
        self.paragraphs.join(CHUNK_SEPARATOR)
    }

    pub fn is_oversize(&self, max_chars: usize) -> bool {
        self.char_length > max_chars
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

pub fn is_valid_paragraph(text: &str) -> bool {
    char_len(text) >= MIN_PARAGRAPH_CHARS
}

/// Paragraphs of at least [`MIN_PARAGRAPH_CHARS`] characters, in order.
pub fn valid_paragraphs<S: AsRef<str>>(paragraphs: &[S]) -> Vec<String> {
    paragraphs.iter().map(AsRef::as_ref).filter(|p| is_valid_paragraph(p)).map(str::to_string).collect()
}

/// Greedy sequential packing. A paragraph joins the current chunk while the
/// joined length stays within `max_chars`; a paragraph longer than
/// `max_chars` is never split and forms its own chunk.
pub fn chunk_fill_limit<S: AsRef<str>>(paragraphs: &[S], max_chars: usize) -> Vec<Chunk> {
    assert!(max_chars > 0, "chunk size must be positive");
    let sep = char_len(CHUNK_SEPARATOR);
    let mut chunks: Vec<Chunk> = Vec::new();
    let mut current: Option<Chunk> = None;
    for (pos, paragraph) in paragraphs.iter().enumerate() {
        let paragraph = paragraph.as_ref();
        let len = char_len(paragraph);
        if let Some(chunk) = current.as_mut() {
            if chunk.char_length + sep + len <= max_chars {
                chunk.paragraphs.push(paragraph.to_string());
                chunk.char_length += sep + len;
                continue;
            }
            chunks.extend(current.take());
        }
        current = Some(Chunk {
            paragraphs: vec![paragraph.to_string()],
            char_length: len,
            index: chunks.len(),
            first_paragraph: pos,
        });
    }
    chunks.extend(current);
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(n: usize) -> String {
        "x".repeat(n)
    }

    #[test]
    fn validity_boundary() {
        let ps = [text(50), text(150), text(200), text(99), text(100)];
        let out = valid_paragraphs(&ps);
        assert_eq!(out.iter().map(|p| p.len()).collect::<Vec<_>>(), vec![150, 200, 100]);
        assert!(valid_paragraphs(&[text(10)]).is_empty());
        // multibyte text counts characters
        assert!(is_valid_paragraph(&"é".repeat(100)));
    }

    #[test]
    fn three_four_thousands() {
        let ps = [text(4000), text(4000), text(4000)];
        let chunks = chunk_fill_limit(&ps, DEFAULT_CHUNK_CHARS);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].paragraphs.len(), 2);
        assert_eq!(chunks[0].char_length, 8001);
        assert_eq!(chunks[1].first_paragraph, 2);
        assert_eq!(chunks[1].index, 1);
    }

    #[test]
    fn oversize_and_empty() {
        let chunks = chunk_fill_limit(&[text(12000)], DEFAULT_CHUNK_CHARS);
        assert_eq!(chunks.len(), 1);
        assert!(chunks[0].is_oversize(DEFAULT_CHUNK_CHARS));
        assert!(chunk_fill_limit::<String>(&[], DEFAULT_CHUNK_CHARS).is_empty());
    }

    #[test]
    fn exact_fit_includes_separator() {
        let chunks = chunk_fill_limit(&[text(5000), text(4999)], 10_000);
        assert_eq!(chunks.len(), 1);
        let chunks = chunk_fill_limit(&[text(5000), text(5000)], 10_000);
        assert_eq!(chunks.len(), 2);
    }
}
