use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::labeling::{tokenize, Label, TokenLabels, TokenizerMode};
use crate::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Tokens shorter than this (after trimming punctuation) are never flagged.
    pub min_token_len: usize,
    /// Majority-vote window over neighbouring flags; 1 disables smoothing.
    pub smoothing_window: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            min_token_len: 3,
            smoothing_window: 1,
        }
    }
}

fn key(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Flags answer tokens whose case-folded form never occurs in the reference.
pub fn baseline_detect(reference: &str, answer: &str, config: &BaselineConfig) -> TokenLabels {
    let support: HashSet<String> = tokenize(reference, TokenizerMode::Whitespace)
        .iter()
        .map(|t| key(&t.text))
        .collect();
    let tokens = tokenize(answer, TokenizerMode::Whitespace);
    let eligible: Vec<bool> = tokens
        .iter()
        .map(|t| key(&t.text).chars().count() >= config.min_token_len)
        .collect();
    let raw: Vec<bool> = tokens
        .iter()
        .zip(&eligible)
        .map(|(t, &ok)| ok && !support.contains(&key(&t.text)))
        .collect();
    let radius = config.smoothing_window / 2;
    let labels = (0..tokens.len())
        .map(|i| {
            if !eligible[i] {
                return Label::O;
            }
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(tokens.len());
            let votes = raw[lo..hi].iter().filter(|&&f| f).count();
            if 2 * votes > hi - lo {
                Label::H
            } else {
                Label::O
            }
        })
        .collect();
    TokenLabels {
        tokens,
        labels,
        task: Task::Binary,
    }
}
