use serde::{Deserialize, Serialize};

use super::{derive_seed, generate_corpus, simulate_detector, CorpusSpec, NoiseSpec, SynthError};
use crate::estimator::{count_detections, estimate_rate, DetectorPerformance, EvalSource};
use crate::labeling::{project_labels, tokenize, TokenLabels, TokenizerMode};
use crate::metrics::score_corpus;
use crate::Task;

/// End-to-end check of the correction on a synthetic corpus: measure the
/// simulated detector on a labeled split, then estimate the rate on the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySpec {
    pub n_docs: usize,
    /// Leading documents used to measure precision and recall.
    pub silver_docs: usize,
    pub tokens_per_doc: usize,
    pub target_rate: f64,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub seed: u64,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        Self {
            n_docs: 500,
            silver_docs: 100,
            tokens_per_doc: 200,
            target_rate: 0.12,
            fp_rate: 0.05,
            fn_rate: 0.25,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub spec: RecoverySpec,
    pub precision: f64,
    pub recall: f64,
    pub h_det: u64,
    pub n: u64,
    /// Realised share of hallucinated tokens in the estimation split, percent.
    pub true_rate: f64,
    pub hr_est: f64,
    pub naive: f64,
    /// `|hr_est - 100 q|`.
    pub abs_error: f64,
    /// `|naive - 100 q|`.
    pub naive_abs_error: f64,
}

pub fn recovery_experiment(spec: &RecoverySpec) -> Result<RecoveryReport, SynthError> {
    if spec.silver_docs == 0 || spec.silver_docs >= spec.n_docs {
        return Err(SynthError::InvalidSpec(format!(
            "silver split {} must leave documents on both sides of {}",
            spec.silver_docs, spec.n_docs
        )));
    }
    let docs = generate_corpus(&CorpusSpec {
        n_docs: spec.n_docs,
        tokens_per_doc: spec.tokens_per_doc,
        target_rate: spec.target_rate,
        seed: spec.seed,
        language: "synthetic".into(),
    })?;
    let noise = NoiseSpec {
        fp_rate: spec.fp_rate,
        fn_rate: spec.fn_rate,
        seed: derive_seed(spec.seed, "detector"),
    };
    let mut gold: Vec<TokenLabels> = Vec::with_capacity(docs.len());
    let mut pred: Vec<TokenLabels> = Vec::with_capacity(docs.len());
    for d in &docs {
        let tokens = tokenize(&d.gold.text, TokenizerMode::Whitespace);
        let g = project_labels(&d.gold, &tokens, Task::Binary).expect("tokens come from the text");
        pred.push(simulate_detector(&g, &noise, &d.id)?);
        gold.push(g);
    }
    let (silver_gold, rest_gold) = gold.split_at(spec.silver_docs);
    let (silver_pred, rest_pred) = pred.split_at(spec.silver_docs);
    let report = score_corpus(silver_gold.iter().zip(silver_pred), Task::Binary)
        .map_err(|e| SynthError::Pipeline(e.to_string()))?;
    let perf = DetectorPerformance {
        language: "synthetic".into(),
        task: Task::Binary,
        source: EvalSource::Silver,
        precision: report.precision,
        recall: report.recall,
    };
    let (h_det, n) = count_detections(rest_pred).map_err(|e| SynthError::Pipeline(e.to_string()))?;
    let (true_pos, _) = count_detections(rest_gold).map_err(|e| SynthError::Pipeline(e.to_string()))?;
    let rate = estimate_rate(&perf, h_det, n).map_err(|e| SynthError::Pipeline(e.to_string()))?;
    let target = 100.0 * spec.target_rate;
    Ok(RecoveryReport {
        spec: spec.clone(),
        precision: report.precision,
        recall: report.recall,
        h_det,
        n,
        true_rate: 100.0 * true_pos as f64 / n as f64,
        hr_est: rate.hr_est,
        naive: rate.naive,
        abs_error: (rate.hr_est - target).abs(),
        naive_abs_error: (rate.naive - target).abs(),
    })
}
