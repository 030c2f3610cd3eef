//! Record types, the article-quality filter and line-oriented JSONL I/O.
//!
//! Every record is one JSON object per line with fields in declaration
//! order, so equal records always serialize to identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{DetectionRun, DetectorPerformance, EvalSource};
use crate::labeling::{Label, Token, TokenLabels};
use crate::markup::{AnnotatedText, Span};
use crate::metrics::ScoreReport;
use crate::Task;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: schema violation ({schema}): {message}")]
    SchemaViolation {
        line: usize,
        schema: &'static str,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(String),
}

impl CorpusError {
    /// 1-based line of the offending record, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::MalformedJson { line, .. } | CorpusError::SchemaViolation { line, .. } => {
                Some(*line)
            }
            _ => None,
        }
    }
}

/// A JSONL record kind.
pub trait Record: Serialize + DeserializeOwned {
    const SCHEMA: &'static str;

    /// Semantic checks beyond field presence and type.
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub language: String,
    pub text: String,
    /// Collaborative depth, supplied with the article.
    pub depth: f64,
}

impl ArticleRecord {
    /// Length of `text` in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

impl Record for ArticleRecord {
    const SCHEMA: &'static str = "article";

    fn check(&self) -> Result<(), String> {
        if !(self.depth.is_finite() && self.depth >= 0.0) {
            return Err(format!("depth {} must be a non-negative number", self.depth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub article_id: String,
    pub language: String,
    pub text: String,
}

impl Record for QueryRecord {
    const SCHEMA: &'static str = "query";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    pub query_id: String,
    pub model_id: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_markup: Option<String>,
    /// Detector labels over the answer, when already run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Label>>,
}

impl Record for ResponseRecord {
    const SCHEMA: &'static str = "response";

    fn check(&self) -> Result<(), String> {
        match (&self.answer, &self.answer_markup) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err("exactly one of `answer` and `answer_markup` is required".into()),
        }
    }
}

/// An answer with offset-based span annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    pub id: String,
    pub language: String,
    pub answer_text: String,
    pub spans: Vec<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

impl AnnotatedRecord {
    pub fn document(&self) -> Result<AnnotatedText, crate::markup::MarkupError> {
        AnnotatedText::new(self.answer_text.clone(), self.spans.clone())
    }
}

impl Record for AnnotatedRecord {
    const SCHEMA: &'static str = "annotated";

    fn check(&self) -> Result<(), String> {
        self.document().map(|_| ()).map_err(|e| e.to_string())
    }
}

/// An answer with inline tags, optionally paired with its reference passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkupRecord {
    pub id: String,
    pub language: String,
    pub answer_markup: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl Record for MarkupRecord {
    const SCHEMA: &'static str = "markup";
}

/// Token labels of one answer, from an annotator or a detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsRecord {
    pub id: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    pub task: Task,
    pub tokens: Vec<Token>,
    pub labels: Vec<Label>,
}

impl LabelsRecord {
    pub fn from_labels(id: &str, language: &str, annotator: Option<&str>, tl: &TokenLabels) -> Self {
        Self {
            id: id.to_string(),
            language: language.to_string(),
            annotator: annotator.map(str::to_string),
            task: tl.task,
            tokens: tl.tokens.clone(),
            labels: tl.labels.clone(),
        }
    }

    pub fn token_labels(&self) -> TokenLabels {
        TokenLabels {
            tokens: self.tokens.clone(),
            labels: self.labels.clone(),
            task: self.task,
        }
    }
}

impl Record for LabelsRecord {
    const SCHEMA: &'static str = "labels";

    fn check(&self) -> Result<(), String> {
        self.token_labels().validate().map_err(|e| e.to_string())
    }
}

impl Record for DetectorPerformance {
    const SCHEMA: &'static str = "perf";

    fn check(&self) -> Result<(), String> {
        self.validate().map_err(|e| e.to_string())
    }
}

impl Record for DetectionRun {
    const SCHEMA: &'static str = "run";

    fn check(&self) -> Result<(), String> {
        self.validate().map_err(|e| e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses one record per non-blank line.
pub fn read_jsonl<T: Record, R: BufRead>(reader: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::MalformedJson {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| {
            let message = e.to_string();
            if e.is_data() {
                CorpusError::SchemaViolation {
                    line: line_no,
                    schema: T::SCHEMA,
                    message,
                }
            } else {
                CorpusError::MalformedJson {
                    line: line_no,
                    message,
                }
            }
        })?;
        record.check().map_err(|message| CorpusError::SchemaViolation {
            line: line_no,
            schema: T::SCHEMA,
            message,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_jsonl<T: Record>(path: impl AsRef<Path>) -> Result<Vec<T>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_jsonl(BufReader::new(file))
}

/// Writes one object per line with a trailing newline; returns the count.
pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut writer: W) -> std::io::Result<usize> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(records.len())
}

pub fn store_jsonl<T: Serialize>(records: &[T], path: impl AsRef<Path>) -> Result<usize, CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    write_jsonl(records, BufWriter::new(file)).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped: usize,
    /// Articles below the length threshold (may also be too shallow).
    pub too_short: usize,
    /// Articles below the depth threshold (may also be too short).
    pub too_shallow: usize,
}

/// Keeps articles with at least `min_len` characters and depth at least
/// `min_depth`.
pub fn filter_articles(
    records: impl IntoIterator<Item = ArticleRecord>,
    min_len: usize,
    min_depth: f64,
) -> (Vec<ArticleRecord>, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for r in records {
        let short = r.char_len() < min_len;
        let shallow = r.depth < min_depth;
        report.too_short += short as usize;
        report.too_shallow += shallow as usize;
        if short || shallow {
            report.dropped += 1;
        } else {
            report.kept += 1;
            kept.push(r);
        }
    }
    (kept, report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DanglingRef {
    pub schema: String,
    pub id: String,
    pub missing: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub dangling: Vec<DanglingRef>,
    /// Articles with exactly one query; allowed, but reported.
    pub single_query_articles: Vec<String>,
}

impl IntegrityReport {
    pub fn is_ok(&self) -> bool {
        self.dangling.is_empty()
    }
}

/// Checks that queries resolve to articles and responses to queries.
pub fn verify_references(
    articles: &[ArticleRecord],
    queries: &[QueryRecord],
    responses: &[ResponseRecord],
) -> IntegrityReport {
    let article_ids: BTreeSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
    let query_ids: BTreeSet<&str> = queries.iter().map(|q| q.id.as_str()).collect();
    let mut report = IntegrityReport::default();
    let mut per_article: BTreeMap<&str, usize> = BTreeMap::new();
    for q in queries {
        if article_ids.contains(q.article_id.as_str()) {
            *per_article.entry(q.article_id.as_str()).or_default() += 1;
        } else {
            report.dangling.push(DanglingRef {
                schema: QueryRecord::SCHEMA.into(),
                id: q.id.clone(),
                missing: q.article_id.clone(),
            });
        }
    }
    for r in responses {
        if !query_ids.contains(r.query_id.as_str()) {
            report.dangling.push(DanglingRef {
                schema: ResponseRecord::SCHEMA.into(),
                id: r.id.clone(),
                missing: r.query_id.clone(),
            });
        }
    }
    report.single_query_articles = per_article
        .into_iter()
        .filter(|&(_, n)| n == 1)
        .map(|(id, _)| {
            log::warn!("article `{id}` has a single query");
            id.to_string()
        })
        .collect();
    report
}

/// One row of a detector evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub language: String,
    pub task: Task,
    pub source: EvalSource,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreRow {
    pub fn new(language: &str, source: EvalSource, report: &ScoreReport) -> Self {
        Self {
            language: language.to_string(),
            task: report.task,
            source,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
        }
    }

    pub fn performance(&self) -> DetectorPerformance {
        DetectorPerformance {
            language: self.language.clone(),
            task: self.task,
            source: self.source,
            precision: self.precision,
            recall: self.recall,
        }
    }
}

/// `language,task,source,precision,recall,f1` with a header row.
pub fn score_rows_csv(rows: &[ScoreRow]) -> Result<String, CorpusError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["language", "task", "source", "precision", "recall", "f1"])
            .map_err(|e| CorpusError::Csv(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| CorpusError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CorpusError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CorpusError::Csv(e.to_string()))
}
