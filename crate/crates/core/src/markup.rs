//! Inline hallucination tag markup.
//!
//! Hallucinated spans are encoded inline as `<entity>…</entity>`,
//! `<relation>…</relation>` and so on, one tag name per hallucination type.
//! Parsing strips the tags and returns the clean text together with the
//! spans, addressed in Unicode scalar values of the clean text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The six fine-grained hallucination categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HallucinationType {
    #[serde(rename = "ENT")]
    Entity,
    #[serde(rename = "REL")]
    Relation,
    #[serde(rename = "INV")]
    Invented,
    #[serde(rename = "CON")]
    Contradictory,
    #[serde(rename = "UNV")]
    Unverifiable,
    #[serde(rename = "SUB")]
    Subjective,
}

impl HallucinationType {
    pub const ALL: [HallucinationType; 6] = [
        HallucinationType::Entity,
        HallucinationType::Relation,
        HallucinationType::Invented,
        HallucinationType::Contradictory,
        HallucinationType::Unverifiable,
        HallucinationType::Subjective,
    ];

    /// Short upper-case code used in label files and tables (`ENT`, `REL`, ...).
    pub fn code(self) -> &'static str {
        match self {
            HallucinationType::Entity => "ENT",
            HallucinationType::Relation => "REL",
            HallucinationType::Invented => "INV",
            HallucinationType::Contradictory => "CON",
            HallucinationType::Unverifiable => "UNV",
            HallucinationType::Subjective => "SUB",
        }
    }

    /// Canonical lower-case tag name used in markup.
    pub fn tag_name(self) -> &'static str {
        match self {
            HallucinationType::Entity => "entity",
            HallucinationType::Relation => "relation",
            HallucinationType::Invented => "invented",
            HallucinationType::Contradictory => "contradictory",
            HallucinationType::Unverifiable => "unverifiable",
            HallucinationType::Subjective => "subjective",
        }
    }

    /// Position in [`HallucinationType::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Looks up a tag name, ignoring ASCII case.
    pub fn from_tag_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.tag_name().eq_ignore_ascii_case(name))
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.code() == code)
    }
}

impl fmt::Display for HallucinationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for HallucinationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_code(s)
            .or_else(|| Self::from_tag_name(s))
            .ok_or_else(|| format!("unknown hallucination type `{s}`"))
    }
}

/// A typed character range `[start, end)` over a host text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub htype: HallucinationType,
}

impl Span {
    pub fn new(start: usize, end: usize, htype: HallucinationType) -> Self {
        Self { start, end, htype }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkupError {
    #[error("unbalanced tag `{tag}` at character {offset}")]
    UnbalancedTag { offset: usize, tag: String },
    #[error("tag `{tag}` opens at character {offset} inside an open `{outer}` tag")]
    NestedTag {
        offset: usize,
        tag: String,
        outer: String,
    },
    #[error("unknown tag `{tag}` at character {offset}")]
    UnknownTag { offset: usize, tag: String },
    #[error("invalid spans: {0}")]
    InvalidSpans(String),
}

/// Clean text plus sorted, non-overlapping typed spans.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedText {
    pub text: String,
    pub spans: Vec<Span>,
}

impl AnnotatedText {
    /// Builds a document, checking every span invariant.
    pub fn new(text: impl Into<String>, spans: Vec<Span>) -> Result<Self, MarkupError> {
        let doc = Self {
            text: text.into(),
            spans,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn plain(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            spans: Vec::new(),
        }
    }

    /// Length of the text in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn validate(&self) -> Result<(), MarkupError> {
        let len = self.char_len();
        let mut prev_end = 0usize;
        for (i, span) in self.spans.iter().enumerate() {
            if span.start >= span.end {
                return Err(MarkupError::InvalidSpans(format!(
                    "span {i} [{}, {}) is empty or reversed",
                    span.start, span.end
                )));
            }
            if span.end > len {
                return Err(MarkupError::InvalidSpans(format!(
                    "span {i} [{}, {}) exceeds text length {len}",
                    span.start, span.end
                )));
            }
            if i > 0 && span.start < prev_end {
                return Err(MarkupError::InvalidSpans(format!(
                    "span {i} [{}, {}) overlaps or precedes the previous span ending at {prev_end}",
                    span.start, span.end
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }

    /// Text covered by `span`.
    pub fn span_text(&self, span: &Span) -> &str {
        char_slice(&self.text, span.start, span.end)
    }
}

/// Slices `text` by Unicode scalar offsets, clamping to the text end.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let b0 = byte_offset(text, start);
    let b1 = byte_offset(text, end.max(start));
    &text[b0..b1]
}

/// Byte offset of the `idx`-th scalar value (or the text length past the end).
pub fn byte_offset(text: &str, idx: usize) -> usize {
    text.char_indices()
        .nth(idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

enum Piece<'a> {
    Text(char),
    Open(&'a str),
    Close(&'a str),
}

/// Recognizes `<name>` or `</name>` starting at `chars[i]`; returns the tag
/// and the number of scalar values it spans.
fn scan_tag<'a>(src: &'a str, chars: &[(usize, char)], i: usize) -> Option<(Piece<'a>, usize)> {
    let mut j = i + 1;
    let closing = matches!(chars.get(j), Some((_, '/')));
    if closing {
        j += 1;
    }
    let name_start = j;
    while let Some((_, c)) = chars.get(j) {
        if c.is_ascii_alphabetic() {
            j += 1;
        } else {
            break;
        }
    }
    if j == name_start || !matches!(chars.get(j), Some((_, '>'))) {
        return None;
    }
    let name = &src[chars[name_start].0..chars[j].0];
    let width = j + 1 - i;
    Some((
        if closing {
            Piece::Close(name)
        } else {
            Piece::Open(name)
        },
        width,
    ))
}

/// Strips hallucination tags from `tagged`, returning the clean text and
/// one span per tag pair.
///
/// Tag names match case-insensitively. A `<` that does not start a
/// well-formed `<name>` / `</name>` token is kept as ordinary text.
/// Zero-length tag pairs are accepted and dropped.
pub fn parse_markup(tagged: &str) -> Result<AnnotatedText, MarkupError> {
    let chars: Vec<(usize, char)> = tagged.char_indices().collect();
    let mut text = String::with_capacity(tagged.len());
    let mut clean_len = 0usize;
    let mut spans = Vec::new();
    // (type, clean start, tagged offset of the opening tag, raw name)
    let mut open: Option<(HallucinationType, usize, usize, String)> = None;
    let mut dropped = 0usize;

    let mut i = 0;
    while i < chars.len() {
        let (piece, width) = if chars[i].1 == '<' {
            scan_tag(tagged, &chars, i).unwrap_or((Piece::Text('<'), 1))
        } else {
            (Piece::Text(chars[i].1), 1)
        };
        match piece {
            Piece::Text(c) => {
                text.push(c);
                clean_len += 1;
            }
            Piece::Open(name) => {
                let htype = HallucinationType::from_tag_name(name).ok_or_else(|| {
                    MarkupError::UnknownTag {
                        offset: i,
                        tag: name.to_string(),
                    }
                })?;
                if let Some((_, _, _, outer)) = &open {
                    return Err(MarkupError::NestedTag {
                        offset: i,
                        tag: name.to_string(),
                        outer: outer.clone(),
                    });
                }
                open = Some((htype, clean_len, i, name.to_string()));
            }
            Piece::Close(name) => {
                let htype = HallucinationType::from_tag_name(name).ok_or_else(|| {
                    MarkupError::UnknownTag {
                        offset: i,
                        tag: name.to_string(),
                    }
                })?;
                match open.take() {
                    Some((open_type, start, _, _)) if open_type == htype => {
                        if start == clean_len {
                            dropped += 1;
                        } else {
                            spans.push(Span::new(start, clean_len, htype));
                        }
                    }
                    _ => {
                        return Err(MarkupError::UnbalancedTag {
                            offset: i,
                            tag: name.to_string(),
                        })
                    }
                }
            }
        }
        i += width;
    }
    if let Some((_, _, offset, name)) = open {
        return Err(MarkupError::UnbalancedTag { offset, tag: name });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} zero-length tag pair(s)");
    }
    Ok(AnnotatedText { text, spans })
}

/// Inverse of [`parse_markup`]: wraps every span in its canonical tag.
pub fn render_markup(doc: &AnnotatedText) -> Result<String, MarkupError> {
    doc.validate()?;
    let mut out = String::with_capacity(doc.text.len() + doc.spans.len() * 24);
    let mut spans = doc.spans.iter().peekable();
    let mut open: Option<&Span> = None;
    for (idx, c) in doc.text.chars().enumerate() {
        if let Some(span) = open {
            if span.end == idx {
                close_tag(&mut out, span.htype);
                open = None;
            }
        }
        if let Some(span) = spans.peek() {
            if span.start == idx {
                open_tag(&mut out, span.htype);
                open = spans.next();
            }
        }
        out.push(c);
    }
    if let Some(span) = open {
        close_tag(&mut out, span.htype);
    }
    Ok(out)
}

fn open_tag(out: &mut String, htype: HallucinationType) {
    out.push('<');
    out.push_str(htype.tag_name());
    out.push('>');
}

fn close_tag(out: &mut String, htype: HallucinationType) {
    out.push_str("</");
    out.push_str(htype.tag_name());
    out.push('>');
}
