use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, SynthError};
use crate::labeling::{Label, TokenLabels};
use crate::Task;

/// Error rates of a simulated detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Probability that a truly-`O` token is flagged.
    pub fp_rate: f64,
    /// Probability that a truly hallucinated token is missed.
    pub fn_rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [("fp_rate", self.fp_rate), ("fn_rate", self.fn_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::InvalidNoise(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Expected precision and recall on a corpus with positive token share `q`.
    pub fn expected_precision_recall(&self, q: f64) -> (f64, f64) {
        let tp = q * (1.0 - self.fn_rate);
        let fp = (1.0 - q) * self.fp_rate;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        (precision, 1.0 - self.fn_rate)
    }
}

/// Binary predictions obtained by flipping gold labels independently:
/// positives drop to `O` with probability `fn_rate`, `O` tokens become `H`
/// with probability `fp_rate`. The stream is derived from
/// `(noise.seed, doc_id)`.
pub fn simulate_detector(
    gold: &TokenLabels,
    noise: &NoiseSpec,
    doc_id: &str,
) -> Result<TokenLabels, SynthError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(noise.seed, doc_id));
    let labels = gold
        .labels
        .iter()
        .map(|l| {
            // One draw per token keeps streams aligned across noise settings.
            let u: f64 = rng.random();
            let flagged = if l.is_positive() {
                u >= noise.fn_rate
            } else {
                u < noise.fp_rate
            };
            if flagged {
                Label::H
            } else {
                Label::O
            }
        })
        .collect();
    Ok(TokenLabels {
        tokens: gold.tokens.clone(),
        labels,
        task: Task::Binary,
    })
}
