//! Detector-corrected hallucination rate estimation.
//!
//! A detector that flags `H_det` of `N` generated tokens, with token-level
//! precision `P` and recall `R`, implies roughly `P · H_det` true positives
//! and therefore `P · H_det / R` truly hallucinated tokens. The corrected
//! rate is that count over `N`, in percent.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::TokenLabels;
use crate::Task;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("recall is zero for `{0}`; the correction is undefined")]
    ZeroRecall(String),
    #[error("corpus has zero tokens")]
    ZeroCorpus,
    #[error("no tokens in the detector output")]
    EmptyCorpus,
    #[error("no estimates for group {language}/{model_id}")]
    EmptyGroup { language: String, model_id: String },
    #[error("invalid detector performance for `{language}`: {reason}")]
    InvalidPerformance { language: String, reason: String },
    #[error("invalid detection run: {0}")]
    InvalidRun(String),
    #[error("no {task} detector performance for language `{language}`")]
    MissingPerformance { language: String, task: Task },
}

/// Which evaluation set a performance estimate was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSource {
    Silver,
    Gold,
}

impl fmt::Display for EvalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalSource::Silver => "silver",
            EvalSource::Gold => "gold",
        })
    }
}

impl FromStr for EvalSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "silver" => Ok(EvalSource::Silver),
            "gold" => Ok(EvalSource::Gold),
            other => Err(format!("unknown source `{other}` (expected silver|gold)")),
        }
    }
}

/// Token-level precision and recall of a detector on one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorPerformance {
    pub language: String,
    pub task: Task,
    pub source: EvalSource,
    pub precision: f64,
    pub recall: f64,
}

impl DetectorPerformance {
    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |reason: String| EstimateError::InvalidPerformance {
            language: self.language.clone(),
            reason,
        };
        if !(0.0..=1.0).contains(&self.precision) {
            return Err(bad(format!("precision {} outside [0, 1]", self.precision)));
        }
        if !(0.0..=1.0).contains(&self.recall) {
            return Err(bad(format!("recall {} outside [0, 1]", self.recall)));
        }
        Ok(())
    }
}

/// One detector instance run over one generation seed's responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRun {
    pub language: String,
    pub model_id: String,
    pub seed: u64,
    pub detector_instance: String,
    pub h_det: u64,
    pub n: u64,
}

impl DetectionRun {
    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.n == 0 {
            return Err(EstimateError::InvalidRun(format!(
                "{}/{} seed {}: n must be positive",
                self.language, self.model_id, self.seed
            )));
        }
        if self.h_det > self.n {
            return Err(EstimateError::InvalidRun(format!(
                "{}/{} seed {}: h_det {} exceeds n {}",
                self.language, self.model_id, self.seed, self.h_det, self.n
            )));
        }
        Ok(())
    }
}

/// Total detected (non-`O`) tokens and total tokens over a set of responses.
pub fn count_detections(preds: &[TokenLabels]) -> Result<(u64, u64), EstimateError> {
    let (h_det, n) = preds
        .par_iter()
        .map(|tl| (tl.positives() as u64, tl.len() as u64))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if n == 0 {
        return Err(EstimateError::EmptyCorpus);
    }
    Ok((h_det, n))
}

/// Expected true positives among `h_det` detections at precision `p`.
pub fn true_positives(precision: f64, h_det: f64) -> f64 {
    precision * h_det
}

/// Truly hallucinated count implied by `tp` true positives at recall `r`.
pub fn corrected_count(tp: f64, recall: f64) -> f64 {
    tp / recall
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateComputation {
    /// Corrected rate in percent.
    pub hr_est: f64,
    /// Uncorrected detected share in percent.
    pub naive: f64,
    pub exceeds_100: bool,
}

/// Corrected and naive hallucination rates, in percent. Not clamped.
pub fn estimate_rate(
    perf: &DetectorPerformance,
    h_det: u64,
    n: u64,
) -> Result<RateComputation, EstimateError> {
    perf.validate()?;
    if perf.recall == 0.0 {
        return Err(EstimateError::ZeroRecall(perf.language.clone()));
    }
    if n == 0 {
        return Err(EstimateError::ZeroCorpus);
    }
    let (h, n) = (h_det as f64, n as f64);
    let hr_est = 100.0 * perf.precision * h / (perf.recall * n);
    Ok(RateComputation {
        hr_est,
        naive: 100.0 * h / n,
        exceeds_100: hr_est > 100.0,
    })
}

pub const FLAG_EXCEEDS_100: &str = "exceeds-100";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub language: String,
    pub model_id: String,
    pub mean: f64,
    pub std: f64,
    pub n_runs: usize,
    #[serde(default)]
    pub flags: Vec<String>,
}

/// Mean and sample standard deviation (`n - 1`; 0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

/// Aggregates per-run estimates into one mean±std per (language, model).
pub fn aggregate_runs(
    groups: &BTreeMap<(String, String), Vec<f64>>,
) -> Result<Vec<RateEstimate>, EstimateError> {
    groups
        .iter()
        .map(|((language, model_id), values)| {
            let (mean, std) = mean_std(values).ok_or_else(|| EstimateError::EmptyGroup {
                language: language.clone(),
                model_id: model_id.clone(),
            })?;
            let mut flags = Vec::new();
            if values.iter().any(|v| *v > 100.0) {
                flags.push(FLAG_EXCEEDS_100.to_string());
            }
            Ok(RateEstimate {
                language: language.clone(),
                model_id: model_id.clone(),
                mean,
                std,
                n_runs: values.len(),
                flags,
            })
        })
        .collect()
}

/// Per-language performance lookup for one task, preferring gold over
/// silver when both are present.
#[derive(Debug, Clone, Default)]
pub struct PerfTable {
    entries: BTreeMap<(String, Task), DetectorPerformance>,
}

impl PerfTable {
    pub fn new<I: IntoIterator<Item = DetectorPerformance>>(perfs: I) -> Result<Self, EstimateError> {
        Self::with_source(perfs, None)
    }

    /// Keeps only entries from `source` when given.
    pub fn with_source<I: IntoIterator<Item = DetectorPerformance>>(
        perfs: I,
        source: Option<EvalSource>,
    ) -> Result<Self, EstimateError> {
        let mut entries: BTreeMap<(String, Task), DetectorPerformance> = BTreeMap::new();
        for p in perfs {
            p.validate()?;
            if source.is_some_and(|s| s != p.source) {
                continue;
            }
            let key = (p.language.clone(), p.task);
            match entries.get(&key) {
                Some(existing) if existing.source == EvalSource::Gold => {}
                _ => {
                    entries.insert(key, p);
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, language: &str, task: Task) -> Option<&DetectorPerformance> {
        self.entries.get(&(language.to_string(), task))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-run corrected estimate, keyed back to its run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEstimate {
    pub run: DetectionRun,
    pub rate: RateComputation,
}

/// Applies the correction to every run with the matching language performance.
pub fn estimate_runs(
    runs: &[DetectionRun],
    perf: &PerfTable,
    task: Task,
) -> Result<Vec<RunEstimate>, EstimateError> {
    runs.iter()
        .map(|run| {
            run.validate()?;
            let p = perf
                .get(&run.language, task)
                .ok_or_else(|| EstimateError::MissingPerformance {
                    language: run.language.clone(),
                    task,
                })?;
            Ok(RunEstimate {
                run: run.clone(),
                rate: estimate_rate(p, run.h_det, run.n)?,
            })
        })
        .collect()
}

/// Groups run estimates by (language, model) and aggregates them.
pub fn aggregate_estimates(estimates: &[RunEstimate]) -> Result<Vec<RateEstimate>, EstimateError> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for e in estimates {
        groups
            .entry((e.run.language.clone(), e.run.model_id.clone()))
            .or_default()
            .push(e.rate.hr_est);
    }
    aggregate_runs(&groups)
}

/// Renders estimates as a language × model matrix of `mean±std` cells.
pub fn rate_matrix_csv(estimates: &[RateEstimate]) -> String {
    let mut models: Vec<&str> = estimates.iter().map(|e| e.model_id.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    let mut rows: BTreeMap<&str, BTreeMap<&str, &RateEstimate>> = BTreeMap::new();
    for e in estimates {
        rows.entry(&e.language).or_default().insert(&e.model_id, e);
    }
    let mut out = String::from("language");
    for m in &models {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for (lang, cells) in rows {
        out.push_str(lang);
        for m in &models {
            out.push(',');
            if let Some(e) = cells.get(m) {
                out.push_str(&format!("{:.2}±{:.2}", e.mean, e.std));
            }
        }
        out.push('\n');
    }
    out
}
