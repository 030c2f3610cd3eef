//! Tokenization with character offsets and Inside-Out label projection.
//!
//! Every token overlapping a span by at least one character takes that
//! span's label; all other tokens are `O`. There is no begin marker, so two
//! adjacent spans of the same type collapse into one run of labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::markup::{AnnotatedText, HallucinationType};

/// Which detection task a labeling belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Hallucinated or not: labels drawn from `{O, H}`.
    Binary,
    /// Seven-way: `O` or one of the six hallucination types.
    Category,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Binary => "binary",
            Task::Category => "category",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Task::Binary),
            "category" => Ok(Task::Category),
            other => Err(format!("unknown task `{other}` (expected binary|category)")),
        }
    }
}

/// Per-token label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    O,
    /// Merged positive class of the binary task.
    H,
    Typed(HallucinationType),
}

impl Label {
    pub fn is_positive(self) -> bool {
        !matches!(self, Label::O)
    }

    /// Collapses every hallucination type into `H`.
    pub fn binarize(self) -> Label {
        match self {
            Label::O => Label::O,
            _ => Label::H,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::O => "O",
            Label::H => "H",
            Label::Typed(t) => t.code(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "O" => Ok(Label::O),
            "H" => Ok(Label::H),
            other => HallucinationType::from_code(other)
                .map(Label::Typed)
                .ok_or_else(|| format!("unknown label `{other}`")),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A token and its `[start, end)` scalar-value range in the host text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// Split on runs of Unicode whitespace.
    #[default]
    Whitespace,
    /// One token per non-whitespace scalar value, for unspaced scripts.
    PerCodepoint,
}

impl FromStr for TokenizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "whitespace" => Ok(TokenizerMode::Whitespace),
            "per_codepoint" | "codepoint" => Ok(TokenizerMode::PerCodepoint),
            other => Err(format!(
                "unknown tokenizer `{other}` (expected whitespace|per_codepoint)"
            )),
        }
    }
}

impl fmt::Display for TokenizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizerMode::Whitespace => "whitespace",
            TokenizerMode::PerCodepoint => "per_codepoint",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("token {index} [{start}, {end}) exceeds text length {text_len}")]
    OffsetMismatch {
        index: usize,
        start: usize,
        end: usize,
        text_len: usize,
    },
    #[error("{tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("label `{label}` is not valid for the {task} task")]
    InvalidLabel { label: Label, task: Task },
}

/// A token stream with one label per token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenLabels {
    pub tokens: Vec<Token>,
    pub labels: Vec<Label>,
    pub task: Task,
}

impl TokenLabels {
    pub fn new(tokens: Vec<Token>, labels: Vec<Label>, task: Task) -> Result<Self, LabelError> {
        let tl = Self {
            tokens,
            labels,
            task,
        };
        tl.validate()?;
        Ok(tl)
    }

    /// Every token labeled `O`.
    pub fn outside(tokens: Vec<Token>, task: Task) -> Self {
        let labels = vec![Label::O; tokens.len()];
        Self {
            tokens,
            labels,
            task,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<(), LabelError> {
        if self.tokens.len() != self.labels.len() {
            return Err(LabelError::LengthMismatch {
                tokens: self.tokens.len(),
                labels: self.labels.len(),
            });
        }
        for &label in &self.labels {
            let ok = match (self.task, label) {
                (_, Label::O) => true,
                (Task::Binary, Label::H) => true,
                (Task::Category, Label::Typed(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(LabelError::InvalidLabel {
                    label,
                    task: self.task,
                });
            }
        }
        Ok(())
    }

    /// The same stream with every positive label merged into `H`.
    pub fn to_binary(&self) -> TokenLabels {
        TokenLabels {
            tokens: self.tokens.clone(),
            labels: self.labels.iter().map(|l| l.binarize()).collect(),
            task: Task::Binary,
        }
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    /// True when both labelings address exactly the same token offsets.
    pub fn same_stream(&self, other: &TokenLabels) -> bool {
        self.tokens.len() == other.tokens.len()
            && self
                .tokens
                .iter()
                .zip(&other.tokens)
                .all(|(a, b)| a.start == b.start && a.end == b.end)
    }
}

/// Splits `text` into tokens carrying scalar-value offsets.
pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<Token> {
    let mut tokens = Vec::new();
    match mode {
        TokenizerMode::PerCodepoint => {
            for (i, c) in text.chars().enumerate() {
                if !c.is_whitespace() {
                    tokens.push(Token {
                        text: c.to_string(),
                        start: i,
                        end: i + 1,
                    });
                }
            }
        }
        TokenizerMode::Whitespace => {
            let mut current = String::new();
            let mut start = 0;
            let mut idx = 0;
            for c in text.chars() {
                if c.is_whitespace() {
                    if !current.is_empty() {
                        tokens.push(Token {
                            text: std::mem::take(&mut current),
                            start,
                            end: idx,
                        });
                    }
                } else {
                    if current.is_empty() {
                        start = idx;
                    }
                    current.push(c);
                }
                idx += 1;
            }
            if !current.is_empty() {
                tokens.push(Token {
                    text: current,
                    start,
                    end: idx,
                });
            }
        }
    }
    tokens
}

/// Projects span annotations onto `tokens` with the Inside-Out scheme.
///
/// A token touching several spans takes the type with the largest
/// character overlap (earliest span on ties). For [`Task::Binary`] every
/// type becomes `H`.
pub fn project_labels(
    doc: &AnnotatedText,
    tokens: &[Token],
    task: Task,
) -> Result<TokenLabels, LabelError> {
    let text_len = doc.char_len();
    let mut labels = Vec::with_capacity(tokens.len());
    let mut first_span = 0;
    for (index, tok) in tokens.iter().enumerate() {
        if tok.end > text_len || tok.start >= tok.end {
            return Err(LabelError::OffsetMismatch {
                index,
                start: tok.start,
                end: tok.end,
                text_len,
            });
        }
        // Spans are sorted and disjoint, so those ending before this token
        // can never overlap a later one if tokens are sorted too.
        while first_span < doc.spans.len() && doc.spans[first_span].end <= tok.start {
            first_span += 1;
        }
        let mut best: Option<(usize, HallucinationType)> = None;
        for span in doc.spans[first_span..].iter() {
            if span.start >= tok.end {
                break;
            }
            let overlap = span.end.min(tok.end) - span.start.max(tok.start);
            if best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, span.htype));
            }
        }
        let label = match (best, task) {
            (None, _) => Label::O,
            (Some(_), Task::Binary) => Label::H,
            (Some((_, t)), Task::Category) => Label::Typed(t),
        };
        labels.push(label);
    }
    Ok(TokenLabels {
        tokens: tokens.to_vec(),
        labels,
        task,
    })
}

/// A run of identically labeled tokens, as a character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSpan {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

/// Merges maximal runs of consecutive tokens sharing one positive label.
pub fn labels_to_spans(tl: &TokenLabels) -> Vec<LabelSpan> {
    let mut spans: Vec<LabelSpan> = Vec::new();
    let mut prev = Label::O;
    for (tok, &label) in tl.tokens.iter().zip(&tl.labels) {
        if label.is_positive() {
            match spans.last_mut() {
                Some(last) if prev == label => last.end = tok.end,
                _ => spans.push(LabelSpan {
                    start: tok.start,
                    end: tok.end,
                    label,
                }),
            }
        }
        prev = label;
    }
    spans
}
