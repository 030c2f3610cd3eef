//! Detector-corrected hallucination rate estimation.
//!
//! The crate covers the whole pipeline from inline span markup to rate
//! estimates and their statistical analysis:
//!
//! - [`markup`]: inline tag parsing and rendering
//! - [`labeling`]: tokenization and span-to-token projection
//! - [`metrics`]: token scoring, Cohen's kappa, adjudication, span tables
//! - [`estimator`]: precision/recall correction of detected counts
//! - [`stats`]: correlation, t-tests, OLS and random-intercept mixed models
//! - [`synth`]: synthetic corpora, injected hallucinations and simulated detectors
//! - [`corpus`]: record types, filters and JSONL I/O

pub mod corpus;
pub mod estimator;
pub mod labeling;
pub mod markup;
pub mod metrics;
pub mod stats;
pub mod synth;

pub use estimator::{estimate_rate, DetectionRun, DetectorPerformance, EvalSource, RateEstimate};
pub use labeling::{project_labels, tokenize, Label, Task, TokenLabels, TokenizerMode};
pub use markup::{parse_markup, render_markup, AnnotatedText, HallucinationType, Span};
pub use metrics::{cohen_kappa, score_tokens, ScoreReport};
