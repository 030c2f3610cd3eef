use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inject::{Editor, Injector, InjectionPlan};
use super::{derive_seed, resources, SynthError};
use crate::labeling::{project_labels, tokenize, TokenizerMode};
use crate::markup::{AnnotatedText, HallucinationType};
use crate::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_docs: usize,
    /// Approximate whitespace-token length of each answer.
    pub tokens_per_doc: usize,
    /// Target share of hallucinated tokens, in `[0, 1)`.
    pub target_rate: f64,
    pub seed: u64,
    pub language: String,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_docs == 0 || self.tokens_per_doc < 10 {
            return Err(SynthError::InvalidSpec(
                "need at least one document of at least 10 tokens".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.target_rate) {
            return Err(SynthError::InvalidSpec(format!(
                "target rate {} outside [0, 1)",
                self.target_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDoc {
    pub id: String,
    pub language: String,
    pub reference: String,
    /// Answer before injection.
    pub clean: String,
    /// Answer with exact ground-truth spans.
    pub gold: AnnotatedText,
}

impl SyntheticDoc {
    /// `(positive tokens, total tokens)` under whitespace tokenization.
    pub fn token_counts(&self) -> (usize, usize) {
        positive_tokens(&self.gold)
    }
}

fn positive_tokens(doc: &AnnotatedText) -> (usize, usize) {
    let tokens = tokenize(&doc.text, TokenizerMode::Whitespace);
    let labels = project_labels(doc, &tokens, Task::Binary).expect("tokens come from the text");
    (labels.positives(), labels.len())
}

fn fill(pattern: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = pattern.to_string();
    for (slot, pool) in [
        ("{P}", resources::PEOPLE),
        ("{C}", resources::CITIES),
        ("{O}", resources::ORGS),
        ("{F}", resources::FIELDS),
        ("{Y}", resources::YEARS),
    ] {
        while out.contains(slot) {
            let v = pool.choose(rng).expect("non-empty pool");
            out = out.replacen(slot, v, 1);
        }
    }
    out
}

/// Fact sentences until at least `tokens` whitespace tokens are produced.
fn passage(tokens: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::new();
    let mut count = 0;
    while count < tokens {
        let s = fill(resources::FACT_PATTERNS.choose(rng).expect("patterns"), rng);
        count += s.split_whitespace().count();
        out.push(s);
    }
    out
}

fn rate(editor: &Editor) -> (f64, usize) {
    let (pos, total) = editor.token_counts();
    let r = if total == 0 { 0.0 } else { pos as f64 / total as f64 };
    (r, total)
}

/// Greedy injection towards token rate `q`. Each round tries one edit of
/// every type and keeps the one landing closest to `q`, preferring edits
/// that overshoot by at most half a token; it stops when nothing improves.
fn inject_to_rate(doc_id: &str, clean: &str, reference: &str, q: f64, plan: &InjectionPlan) -> AnnotatedText {
    let mut inj = Injector::new(doc_id, clean, Some(reference), plan);
    let mut dist = (rate(&inj.editor).0 - q).abs();
    loop {
        inj.editor.sentence_boundaries();
        let start = inj.editor.clone();
        // (overshoots, distance, editor); tuples order non-overshooting first.
        let mut best: Option<(bool, f64, Editor)> = None;
        for t in HallucinationType::ALL {
            if inj.apply(t) {
                let (r, total) = rate(&inj.editor);
                let d = (r - q).abs();
                let over = r - q > 0.5 / total as f64;
                let better = best.as_ref().is_none_or(|(bo, bd, _)| (over, d) < (*bo, *bd));
                if d < dist && better {
                    best = Some((over, d, inj.editor.clone()));
                }
            }
            inj.editor = start.clone();
        }
        match best {
            Some((_, d, editor)) => {
                dist = d;
                inj.editor = editor;
            }
            None => break,
        }
    }
    inj.editor.finish()
}

/// Generates `spec.n_docs` reference/answer pairs whose answers carry
/// injected hallucinations at a token rate close to `spec.target_rate`.
///
/// Each document draws from its own stream, so the corpus is identical for
/// any thread count. The realised rate is exact and available through
/// [`SyntheticDoc::token_counts`].
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<SyntheticDoc>, SynthError> {
    spec.validate()?;
    let plan = InjectionPlan::builtin(spec.seed);
    let clean_tokens = ((spec.tokens_per_doc as f64) * (1.0 - spec.target_rate)).round() as usize;
    let docs = (0..spec.n_docs)
        .into_par_iter()
        .map(|i| {
            let id = format!("{}-{i:05}", spec.language);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed ^ 0x5eed, &id));
            let sentences = passage(spec.tokens_per_doc, &mut rng);
            let reference = sentences.join(" ");
            let mut clean_parts = Vec::new();
            let mut count = 0;
            for s in &sentences {
                if count >= clean_tokens.max(1) {
                    break;
                }
                count += s.split_whitespace().count();
                clean_parts.push(s.as_str());
            }
            let clean = clean_parts.join(" ");
            let gold = inject_to_rate(&id, &clean, &reference, spec.target_rate, &plan);
            SyntheticDoc {
                id,
                language: spec.language.clone(),
                reference,
                clean,
                gold,
            }
        })
        .collect();
    Ok(docs)
}
