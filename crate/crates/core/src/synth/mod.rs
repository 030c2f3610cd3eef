//! Ground-truth synthetic data: rule-based hallucination injection,
//! noisy detector simulation and a lexical-overlap baseline detector.
//!
//! Every random draw comes from a stream derived from `(seed, document id)`,
//! so results do not depend on processing order or thread count.

mod baseline;
mod detector;
mod generate;
mod inject;
mod recovery;
pub mod resources;

use thiserror::Error;

pub use baseline::{baseline_detect, BaselineConfig};
pub use detector::{simulate_detector, NoiseSpec};
pub use generate::{generate_corpus, CorpusSpec, SyntheticDoc};
pub use inject::{inject, Injection, InjectionPlan, Shortfall, Templates};
pub use recovery::{recovery_experiment, RecoveryReport, RecoverySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid injection plan: {0}")]
    InvalidPlan(String),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("document `{0}` is empty")]
    EmptyDocument(String),
    #[error("line {line}: {reason}")]
    Resource { line: usize, reason: String },
    #[error("invalid corpus specification: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Pipeline(String),
}

/// Mixes a run seed with a document key into an independent stream seed.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
