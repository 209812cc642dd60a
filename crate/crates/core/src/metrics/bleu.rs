use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// BLEU settings: order, per-order weights and the first order that gets
/// add-one smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    pub weights: Vec<f64>,
    /// Orders `>= smooth_from` use `(hits + 1) / (total + 1)`.
    pub smooth_from: usize,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig { max_order: 4, weights: vec![0.25; 4], smooth_from: 2 }
    }
}

impl BleuConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_order == 0 {
            return Err("BLEU order must be at least 1".into());
        }
        if self.weights.len() != self.max_order {
            return Err(format!("expected {} BLEU weights, got {}", self.max_order, self.weights.len()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("BLEU weights sum to {sum}, not 1"));
        }
        Ok(())
    }

    /// Short human-readable description, recorded in metric reports.
    pub fn describe(&self) -> String {
        format!(
            "BLEU-{} case-insensitive whitespace tokens, weights {:?}, add-one smoothing for n>={}",
            self.max_order, self.weights, self.smooth_from
        )
    }
}

/// Lower-cased whitespace tokens.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU of `candidate` against a single `reference`, on a 0–100
/// scale.
///
/// ```
/// use sdx_core::metrics::{bleu4, BleuConfig};
///
/// let score = bleu4("a b c x", "a b c d", &BleuConfig::default());
/// assert!((score - 65.8037).abs() < 1e-3);
/// ```
pub fn bleu4(candidate: &str, reference: &str, cfg: &BleuConfig) -> f64 {
    let cand = bleu_tokens(candidate);
    let refs = bleu_tokens(reference);
    bleu_from_tokens(&cand, &refs, cfg)
}

pub fn bleu_from_tokens(cand: &[String], refs: &[String], cfg: &BleuConfig) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=cfg.max_order {
        let cand_counts = ngram_counts(cand, n);
        let ref_counts = ngram_counts(refs, n);
        let total = cand.len().saturating_sub(n - 1);
        let hits: usize = cand_counts
            .iter()
            .map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if n >= cfg.smooth_from {
            (hits as f64 + 1.0) / (total as f64 + 1.0)
        } else if total == 0 {
            return 0.0;
        } else {
            hits as f64 / total as f64
        };
        if precision == 0.0 {
            return 0.0;
        }
        log_sum += cfg.weights[n - 1] * precision.ln();
    }
    let c = cand.len() as f64;
    let r = refs.len() as f64;
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    (100.0 * brevity * log_sum.exp()).clamp(0.0, 100.0)
}

/// Byte-for-byte equality; case and whitespace both matter.
pub fn exact_match(candidate: &str, reference: &str) -> bool {
    candidate == reference
}
