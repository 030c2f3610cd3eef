//! Token-level scoring, inter-annotator agreement and descriptive tables.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{Label, TokenLabels};
use crate::markup::{AnnotatedText, HallucinationType};
use crate::Task;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("labelings do not share a token stream ({left} vs {right} tokens)")]
    TokenMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("every annotator fell below the screening threshold")]
    AllScreenedOut,
    #[error("rating {0} is outside 1..=5")]
    OutOfRange(i64),
    #[error("screening threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("label `{label}` cannot be scored in the {task} task")]
    TaskMismatch { label: Label, task: Task },
}

fn check_stream(a: &TokenLabels, b: &TokenLabels) -> Result<(), MetricsError> {
    if a.same_stream(b) {
        Ok(())
    } else {
        Err(MetricsError::TokenMismatch {
            left: a.len(),
            right: b.len(),
        })
    }
}

/// Per-class counts for the category task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Token confusion counts. In the category task a wrong-type positive
/// counts once as `fp` and once as `fn`, so `tp + fp + fn + tn` may exceed
/// the token count there.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub per_class: [ClassCounts; 6],
}

impl ConfusionCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    pub fn class(&self, htype: HallucinationType) -> ClassCounts {
        self.per_class[htype.index()]
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.tn += rhs.tn;
        for (a, b) in self.per_class.iter_mut().zip(rhs.per_class) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    pub task: Task,
}

impl ScoreReport {
    pub fn from_counts(counts: ConfusionCounts, task: Task) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
            task,
        }
    }
}

/// Raw confusion counts of `pred` against `gold` without building a report.
pub fn confusion(
    gold: &TokenLabels,
    pred: &TokenLabels,
    task: Task,
) -> Result<ConfusionCounts, MetricsError> {
    check_stream(gold, pred)?;
    let mut c = ConfusionCounts::default();
    for (&g, &p) in gold.labels.iter().zip(&pred.labels) {
        let (g, p) = match task {
            Task::Binary => (g.binarize(), p.binarize()),
            Task::Category => {
                for l in [g, p] {
                    if l == Label::H {
                        return Err(MetricsError::TaskMismatch { label: l, task });
                    }
                }
                (g, p)
            }
        };
        match (g.is_positive(), p.is_positive()) {
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (true, true) if g == p => c.tp += 1,
            (true, true) => {
                c.fp += 1;
                c.fn_ += 1;
            }
        }
        if let Task::Category = task {
            match (g, p) {
                (Label::Typed(gt), Label::Typed(pt)) if gt == pt => {
                    c.per_class[gt.index()].tp += 1;
                }
                _ => {
                    if let Label::Typed(pt) = p {
                        c.per_class[pt.index()].fp += 1;
                    }
                    if let Label::Typed(gt) = g {
                        c.per_class[gt.index()].fn_ += 1;
                    }
                }
            }
        }
    }
    Ok(c)
}

/// Token-level precision, recall and F1.
///
/// Binary: any non-`O` label is positive. Category: micro-averaged over the
/// six hallucination classes with `O` excluded from the positives.
pub fn score_tokens(
    gold: &TokenLabels,
    pred: &TokenLabels,
    task: Task,
) -> Result<ScoreReport, MetricsError> {
    Ok(ScoreReport::from_counts(confusion(gold, pred, task)?, task))
}

/// Scores a corpus of aligned documents by summing their confusion counts.
pub fn score_corpus<'a, I>(pairs: I, task: Task) -> Result<ScoreReport, MetricsError>
where
    I: IntoIterator<Item = (&'a TokenLabels, &'a TokenLabels)>,
{
    let mut total = ConfusionCounts::default();
    for (g, p) in pairs {
        total += confusion(g, p, task)?;
    }
    Ok(ScoreReport::from_counts(total, task))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub mode: Task,
}

fn mode_labels(tl: &TokenLabels, mode: Task) -> impl Iterator<Item = Label> + '_ {
    tl.labels.iter().map(move |&l| match mode {
        Task::Binary => l.binarize(),
        Task::Category => l,
    })
}

/// Cohen's kappa over token decisions.
///
/// When chance agreement is 1 (both raters use one identical constant
/// label) kappa is 1 if the labelings agree everywhere and 0 otherwise.
pub fn cohen_kappa(
    a: &TokenLabels,
    b: &TokenLabels,
    mode: Task,
) -> Result<AgreementResult, MetricsError> {
    check_stream(a, b)?;
    if a.is_empty() {
        return Err(MetricsError::EmptyInput("kappa needs at least one token"));
    }
    kappa_from_pairs(mode_labels(a, mode).zip(mode_labels(b, mode)), mode)
}

fn kappa_from_pairs<I>(pairs: I, mode: Task) -> Result<AgreementResult, MetricsError>
where
    I: Iterator<Item = (Label, Label)>,
{
    let mut n = 0u64;
    let mut agree = 0u64;
    let mut marg_a: BTreeMap<Label, u64> = BTreeMap::new();
    let mut marg_b: BTreeMap<Label, u64> = BTreeMap::new();
    for (x, y) in pairs {
        n += 1;
        if x == y {
            agree += 1;
        }
        *marg_a.entry(x).or_default() += 1;
        *marg_b.entry(y).or_default() += 1;
    }
    if n == 0 {
        return Err(MetricsError::EmptyInput("kappa needs at least one token"));
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e: f64 = marg_a
        .iter()
        .map(|(label, &ca)| {
            let cb = marg_b.get(label).copied().unwrap_or(0);
            (ca as f64 / nf) * (cb as f64 / nf)
        })
        .sum();
    let kappa = if p_e >= 1.0 {
        if agree == n {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(AgreementResult {
        kappa,
        observed_agreement: p_o,
        expected_agreement: p_e,
        mode,
    })
}

/// Concatenates one annotator's documents into a single token stream.
fn concat_labels(docs: &[TokenLabels], mode: Task) -> Vec<Label> {
    docs.iter().flat_map(|d| mode_labels(d, mode)).collect()
}

fn check_aligned(a: &[TokenLabels], b: &[TokenLabels]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::TokenMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    a.iter().zip(b).try_for_each(|(x, y)| check_stream(x, y))
}

/// Kappa between two annotators whose documents are concatenated first.
pub fn corpus_kappa(
    a: &[TokenLabels],
    b: &[TokenLabels],
    mode: Task,
) -> Result<AgreementResult, MetricsError> {
    check_aligned(a, b)?;
    let la = concat_labels(a, mode);
    let lb = concat_labels(b, mode);
    kappa_from_pairs(la.into_iter().zip(lb), mode)
}

/// Mean pairwise kappa over all unordered annotator pairs.
///
/// Each annotator contributes a list of documents; documents are
/// concatenated per annotator before each pairwise kappa.
pub fn pairwise_iaa(annotations: &[Vec<TokenLabels>], mode: Task) -> Result<f64, MetricsError> {
    if annotations.len() < 2 {
        return Err(MetricsError::EmptyInput("pairwise agreement needs two annotators"));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..annotations.len() {
        for j in i + 1..annotations.len() {
            sum += corpus_kappa(&annotations[i], &annotations[j], mode)?.kappa;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorAgreement {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjudication {
    pub chosen: String,
    pub agreement: BTreeMap<String, AnnotatorAgreement>,
}

/// Chooses the annotator with the highest kappa against the silver labels.
///
/// Annotators whose observed agreement with silver is below
/// `screen_threshold` are flagged and not eligible. Ties go to the
/// lexicographically smallest id.
pub fn adjudicate(
    annotators: &BTreeMap<String, Vec<TokenLabels>>,
    silver: &[TokenLabels],
    screen_threshold: f64,
    mode: Task,
) -> Result<Adjudication, MetricsError> {
    if !(0.0..=1.0).contains(&screen_threshold) {
        return Err(MetricsError::InvalidThreshold(screen_threshold));
    }
    if annotators.is_empty() {
        return Err(MetricsError::EmptyInput("no annotators"));
    }
    let mut agreement = BTreeMap::new();
    let mut chosen: Option<(&String, f64)> = None;
    for (id, docs) in annotators {
        let res = corpus_kappa(docs, silver, mode)?;
        let flagged = res.observed_agreement < screen_threshold;
        if !flagged && chosen.is_none_or(|(_, best)| res.kappa > best) {
            chosen = Some((id, res.kappa));
        }
        agreement.insert(
            id.clone(),
            AnnotatorAgreement {
                kappa: res.kappa,
                observed_agreement: res.observed_agreement,
                flagged,
            },
        );
    }
    let (chosen, _) = chosen.ok_or(MetricsError::AllScreenedOut)?;
    Ok(Adjudication {
        chosen: chosen.clone(),
        agreement,
    })
}

/// Span counts per language and hallucination type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanTable {
    pub rows: BTreeMap<String, [u64; 6]>,
}

impl SpanTable {
    pub fn row_total(&self, language: &str) -> u64 {
        self.rows.get(language).map_or(0, |r| r.iter().sum())
    }

    pub fn column_totals(&self) -> [u64; 6] {
        let mut totals = [0u64; 6];
        for row in self.rows.values() {
            for (t, v) in totals.iter_mut().zip(row) {
                *t += v;
            }
        }
        totals
    }

    pub fn total(&self) -> u64 {
        self.column_totals().iter().sum()
    }

    /// CSV with the columns `language,ENT,REL,INV,CON,UNV,SUB,Total` and a
    /// closing `Total` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("language");
        for t in HallucinationType::ALL {
            out.push(',');
            out.push_str(t.code());
        }
        out.push_str(",Total\n");
        let mut line = |name: &str, cells: &[u64; 6]| {
            out.push_str(name);
            for c in cells {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{}\n", cells.iter().sum::<u64>()));
        };
        for (lang, row) in &self.rows {
            line(lang, row);
        }
        line("Total", &self.column_totals());
        out
    }
}

pub fn span_stats<'a, I>(docs: I) -> SpanTable
where
    I: IntoIterator<Item = (&'a str, &'a AnnotatedText)>,
{
    let mut table = SpanTable::default();
    for (lang, doc) in docs {
        let row = table.rows.entry(lang.to_string()).or_insert([0; 6]);
        for span in &doc.spans {
            row[span.htype.index()] += 1;
        }
    }
    table
}

/// Column headings of the five-point fooling-likelihood scale.
pub const LIKERT_LEVELS: [&str; 5] = [
    "Very Unlikely",
    "Unlikely",
    "Neutral",
    "Likely",
    "Very Likely",
];

/// Percentage of ratings at each of the five Likert levels.
pub fn likert_distribution(ratings: &[i64]) -> Result<[f64; 5], MetricsError> {
    if ratings.is_empty() {
        return Err(MetricsError::EmptyInput("no ratings"));
    }
    let mut counts = [0u64; 5];
    for &r in ratings {
        if !(1..=5).contains(&r) {
            return Err(MetricsError::OutOfRange(r));
        }
        counts[(r - 1) as usize] += 1;
    }
    let n = ratings.len() as f64;
    Ok(counts.map(|c| 100.0 * c as f64 / n))
}

/// Formats a Likert distribution to one decimal place, as in the published table.
pub fn format_likert(pcts: &[f64; 5]) -> [String; 5] {
    pcts.map(|p| format!("{p:.1}"))
}
