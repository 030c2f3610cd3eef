use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::resources;
use super::{derive_seed, SynthError};
use crate::markup::{AnnotatedText, HallucinationType, Span};

/// Sentence templates per insertion type.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Templates {
    pub subjective: Vec<String>,
    pub unverifiable: Vec<String>,
    pub invented: Vec<String>,
    /// Each contains `{claim}`, filled with a reference sentence.
    pub contradictory: Vec<String>,
}

impl Templates {
    pub fn builtin() -> Self {
        Self {
            subjective: resources::owned(resources::SUBJECTIVE),
            unverifiable: resources::owned(resources::UNVERIFIABLE),
            invented: resources::owned(resources::INVENTED),
            contradictory: resources::owned(resources::CONTRADICTORY),
        }
    }

    fn for_type(&self, htype: HallucinationType) -> &[String] {
        match htype {
            HallucinationType::Subjective => &self.subjective,
            HallucinationType::Unverifiable => &self.unverifiable,
            HallucinationType::Invented => &self.invented,
            HallucinationType::Contradictory => &self.contradictory,
            HallucinationType::Entity | HallucinationType::Relation => &[],
        }
    }
}

/// What to inject and with which resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    /// Expected number of spans per document, indexed by
    /// [`HallucinationType::index`]. Zero disables a type.
    pub intensities: [f64; 6],
    /// `(surface, replacement)` pairs for entity substitution.
    pub gazetteer: Vec<(String, String)>,
    /// `(surface, replacement)` pairs for relation negation.
    pub negations: Vec<(String, String)>,
    pub templates: Templates,
    pub seed: u64,
}

impl InjectionPlan {
    /// Built-in English resources with every type disabled.
    pub fn builtin(seed: u64) -> Self {
        Self {
            intensities: [0.0; 6],
            gazetteer: resources::owned_pairs(resources::GAZETTEER),
            negations: resources::owned_pairs(resources::NEGATIONS),
            templates: Templates::builtin(),
            seed,
        }
    }

    pub fn with_intensity(mut self, htype: HallucinationType, intensity: f64) -> Self {
        self.intensities[htype.index()] = intensity;
        self
    }

    pub fn enabled(&self, htype: HallucinationType) -> bool {
        self.intensities[htype.index()] > 0.0
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for t in HallucinationType::ALL {
            let v = self.intensities[t.index()];
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::InvalidPlan(format!("{t} intensity {v} must be >= 0")));
            }
        }
        for (surface, replacement) in self.gazetteer.iter().chain(&self.negations) {
            if surface.is_empty() || surface == replacement {
                return Err(SynthError::InvalidPlan(format!(
                    "substitution `{surface}` -> `{replacement}` must change a non-empty surface"
                )));
            }
            if !surface.starts_with(Editor::is_word_char) {
                return Err(SynthError::InvalidPlan(format!(
                    "substitution surface `{surface}` must start with a letter or digit"
                )));
            }
        }
        if self
            .templates
            .contradictory
            .iter()
            .any(|t| !t.contains("{claim}"))
        {
            return Err(SynthError::InvalidPlan(
                "contradictory templates need a `{claim}` slot".into(),
            ));
        }
        Ok(())
    }
}

/// Fewer spans of `htype` than requested could be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub htype: HallucinationType,
    pub requested: usize,
    pub emitted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub doc: AnnotatedText,
    /// Types for which no applicable site remained.
    pub shortfalls: Vec<Shortfall>,
}

/// Mutable text with span bookkeeping; offsets are in scalar values.
#[derive(Clone)]
pub(crate) struct Editor {
    chars: Vec<char>,
    spans: Vec<Span>,
    boundaries: Option<Vec<usize>>,
}

impl Editor {
    pub(crate) fn new(text: &str) -> Self {
        Self {
            chars: text.chars().collect(),
            spans: Vec::new(),
            boundaries: None,
        }
    }

    #[cfg(test)]
    pub(crate) fn snapshot(&self) -> AnnotatedText {
        AnnotatedText {
            text: self.chars.iter().collect(),
            spans: self.spans.clone(),
        }
    }

    /// `(positive, total)` whitespace tokens, a token being positive when it
    /// overlaps any span. Agrees with binary projection of the snapshot.
    pub(crate) fn token_counts(&self) -> (usize, usize) {
        let (mut pos, mut total) = (0, 0);
        let mut span_idx = 0;
        let mut i = 0;
        let n = self.chars.len();
        while i < n {
            if self.chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && !self.chars[i].is_whitespace() {
                i += 1;
            }
            total += 1;
            while span_idx < self.spans.len() && self.spans[span_idx].end <= start {
                span_idx += 1;
            }
            if self.spans.get(span_idx).is_some_and(|s| s.start < i) {
                pos += 1;
            }
        }
        (pos, total)
    }

    pub(crate) fn finish(self) -> AnnotatedText {
        AnnotatedText {
            text: self.chars.into_iter().collect(),
            spans: self.spans,
        }
    }

    fn free(&self, start: usize, end: usize) -> bool {
        !self.spans.iter().any(|s| s.overlaps(start, end))
    }

    fn is_word_char(c: char) -> bool {
        c.is_alphanumeric() || c == '_' || c == '-'
    }

    /// Whole-word occurrences of any table surface not touching a span, as
    /// `(start, table index)` in text order.
    fn sites(&self, table: &[(Vec<char>, String)]) -> Vec<(usize, usize)> {
        let n = self.chars.len();
        let mut out = Vec::new();
        let mut prev_word = false;
        for i in 0..n {
            let word = Self::is_word_char(self.chars[i]);
            if word && !prev_word {
                for (k, (pat, _)) in table.iter().enumerate() {
                    let end = i + pat.len();
                    if end <= n
                        && pat.first() == Some(&self.chars[i])
                        && self.chars[i..end] == pat[..]
                        && (end == n || !Self::is_word_char(self.chars[end]))
                        && self.free(i, end)
                    {
                        out.push((i, k));
                    }
                }
            }
            prev_word = word;
        }
        out
    }

    /// Replaces `[start, end)` with `replacement` and marks it.
    fn replace(&mut self, start: usize, end: usize, replacement: &str, htype: HallucinationType) {
        let new: Vec<char> = replacement.chars().collect();
        let delta = new.len() as isize - (end - start) as isize;
        self.chars.splice(start..end, new.iter().copied());
        for s in self.spans.iter_mut().filter(|s| s.start >= end) {
            s.start = (s.start as isize + delta) as usize;
            s.end = (s.end as isize + delta) as usize;
        }
        self.add_span(Span::new(start, start + new.len(), htype));
        self.boundaries = None;
    }

    fn add_span(&mut self, span: Span) {
        let pos = self.spans.partition_point(|s| s.start < span.start);
        self.spans.insert(pos, span);
    }

    /// Positions right after sentence-final punctuation (and the text end),
    /// excluding position 0 and points strictly inside a span. Cached until
    /// the next edit.
    pub(crate) fn sentence_boundaries(&mut self) -> &[usize] {
        if self.boundaries.is_none() {
            self.boundaries = Some(self.compute_boundaries());
        }
        self.boundaries.as_deref().unwrap_or_default()
    }

    fn compute_boundaries(&self) -> Vec<usize> {
        let n = self.chars.len();
        let mut out: Vec<usize> = (1..n)
            .filter(|&i| matches!(self.chars[i - 1], '.' | '!' | '?') && self.chars[i].is_whitespace())
            .collect();
        if n > 0 {
            out.push(n);
        }
        out.retain(|&b| !self.spans.iter().any(|s| s.start < b && b < s.end));
        out
    }

    /// Inserts `" " + sentence` at boundary `at`, marking the sentence.
    fn insert_sentence(&mut self, at: usize, sentence: &str, htype: HallucinationType) {
        let body: Vec<char> = sentence.chars().collect();
        let shift = body.len() + 1;
        let mut insert = Vec::with_capacity(shift);
        insert.push(' ');
        insert.extend(&body);
        self.chars.splice(at..at, insert);
        for s in self.spans.iter_mut().filter(|s| s.start >= at) {
            s.start += shift;
            s.end += shift;
        }
        self.add_span(Span::new(at + 1, at + 1 + body.len(), htype));
        self.boundaries = None;
    }
}

/// Sentences of `text`, split after `.`, `!` or `?`.
pub(crate) fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        cur.push(c);
        if matches!(c, '.' | '!' | '?') {
            let s = cur.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            cur.clear();
        }
    }
    let s = cur.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

fn char_table(pairs: &[(String, String)]) -> Vec<(Vec<char>, String)> {
    pairs.iter().map(|(from, to)| (from.chars().collect(), to.clone())).collect()
}

/// Applies single edits of each hallucination type to an [`Editor`].
pub(crate) struct Injector<'a> {
    pub(crate) editor: Editor,
    pub(crate) rng: ChaCha8Rng,
    plan: &'a InjectionPlan,
    claims: Vec<String>,
    gazetteer: Vec<(Vec<char>, String)>,
    negations: Vec<(Vec<char>, String)>,
}

impl<'a> Injector<'a> {
    pub(crate) fn new(doc_id: &str, text: &str, reference: Option<&str>, plan: &'a InjectionPlan) -> Self {
        let claims = split_sentences(reference.unwrap_or(text))
            .into_iter()
            .map(|s| s.trim_end_matches(['.', '!', '?']).to_string())
            .filter(|s| !s.is_empty())
            .collect();
        Self {
            editor: Editor::new(text),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, doc_id)),
            plan,
            claims,
            gazetteer: char_table(&plan.gazetteer),
            negations: char_table(&plan.negations),
        }
    }

    fn substitute(&mut self, htype: HallucinationType) -> bool {
        let table = if htype == HallucinationType::Entity {
            &self.gazetteer
        } else {
            &self.negations
        };
        let Some(&(start, k)) = self.editor.sites(table).choose(&mut self.rng) else {
            return false;
        };
        let (pat, replacement) = &table[k];
        self.editor.replace(start, start + pat.len(), replacement, htype);
        true
    }

    fn insert(&mut self, htype: HallucinationType) -> bool {
        let plan: &'a InjectionPlan = self.plan;
        let templates = plan.templates.for_type(htype);
        let Some(template) = templates.choose(&mut self.rng) else {
            return false;
        };
        let sentence = if htype == HallucinationType::Contradictory {
            let Some(claim) = self.claims.choose(&mut self.rng) else {
                return false;
            };
            template.replace("{claim}", claim)
        } else {
            template.clone()
        };
        let Some(&at) = self.editor.sentence_boundaries().choose(&mut self.rng) else {
            return false;
        };
        self.editor.insert_sentence(at, &sentence, htype);
        true
    }

    /// One edit of `htype`; false when no applicable site exists.
    pub(crate) fn apply(&mut self, htype: HallucinationType) -> bool {
        match htype {
            HallucinationType::Entity | HallucinationType::Relation => self.substitute(htype),
            _ => self.insert(htype),
        }
    }
}

/// Injects hallucinations into `text` according to `plan`.
///
/// For each type the span count is `floor(intensity)` plus one more with
/// probability `fract(intensity)`. Substitutions run first (entities, then
/// relations), then sentence insertions (contradictory, subjective,
/// unverifiable, invented). Contradictions restate a sentence drawn from
/// `reference`, or from `text` itself when no reference is given. Output is
/// a pure function of `(doc_id, text, reference, plan)`.
pub fn inject(
    doc_id: &str,
    text: &str,
    reference: Option<&str>,
    plan: &InjectionPlan,
) -> Result<Injection, SynthError> {
    plan.validate()?;
    if text.trim().is_empty() {
        return Err(SynthError::EmptyDocument(doc_id.to_string()));
    }
    let mut inj = Injector::new(doc_id, text, reference, plan);
    let mut shortfalls = Vec::new();
    use HallucinationType::*;
    for htype in [Entity, Relation, Contradictory, Subjective, Unverifiable, Invented] {
        let intensity = plan.intensities[htype.index()];
        let mut requested = intensity.floor() as usize;
        if inj.rng.random::<f64>() < intensity.fract() {
            requested += 1;
        }
        let mut emitted = 0;
        while emitted < requested && inj.apply(htype) {
            emitted += 1;
        }
        if emitted < requested {
            log::debug!("{doc_id}: placed {emitted} of {requested} {htype} spans");
            shortfalls.push(Shortfall {
                htype,
                requested,
                emitted,
            });
        }
    }
    Ok(Injection {
        doc: inj.editor.finish(),
        shortfalls,
    })
}
