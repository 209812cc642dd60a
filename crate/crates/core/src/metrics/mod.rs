//! Explanation quality metrics: BLEU-4 with add-one smoothing, exact match
//! and embedding-based semantic similarity, plus corpus-level reports.

mod bleu;
mod semsim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu4, bleu_from_tokens, bleu_tokens, exact_match, BleuConfig};
pub use semsim::{cosine, semantic_similarity, CommandProvider, EmbeddingProvider, HashBagProvider, ProviderError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no rows to evaluate")]
    EmptyInput,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("invalid BLEU configuration: {0}")]
    Config(String),
}

/// One scored (candidate, reference) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub bleu: f64,
    pub exact: bool,
    pub semsim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean_bleu: f64,
    /// Percentage of exact matches.
    pub exact_match_rate: f64,
    pub mean_semsim: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub bleu: String,
    pub semsim_provider: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub header: ReportHeader,
    pub rows: Vec<MetricRow>,
    pub aggregates: Aggregates,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> Result<MetricReport, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// An evaluation row: identifier, generated explanation, reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub candidate: String,
    pub reference: String,
}

/// Scores every row and averages. Embeddings for all texts are requested in
/// one provider call; rows keep input order.
pub fn evaluate_corpus(
    rows: &[EvalRow],
    cfg: &BleuConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<MetricReport, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    cfg.validate().map_err(MetricsError::Config)?;
    let texts: Vec<String> = rows
        .iter()
        .flat_map(|r| [r.candidate.clone(), r.reference.clone()])
        .collect();
    let vectors = provider.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(ProviderError::Failed(format!("expected {} vectors, got {}", texts.len(), vectors.len())).into());
    }
    let mut scored = Vec::with_capacity(rows.len());
    for (row, pair) in rows.iter().zip(vectors.chunks(2)) {
        scored.push(MetricRow {
            id: row.id.clone(),
            bleu: bleu4(&row.candidate, &row.reference, cfg),
            exact: exact_match(&row.candidate, &row.reference),
            semsim: cosine(&pair[0], &pair[1])?,
        });
    }
    let n = scored.len() as f64;
    let aggregates = Aggregates {
        mean_bleu: scored.iter().map(|r| r.bleu).sum::<f64>() / n,
        exact_match_rate: 100.0 * scored.iter().filter(|r| r.exact).count() as f64 / n,
        mean_semsim: scored.iter().map(|r| r.semsim).sum::<f64>() / n,
        count: scored.len(),
    };
    Ok(MetricReport {
        header: ReportHeader { bleu: cfg.describe(), semsim_provider: provider.name() },
        rows: scored,
        aggregates,
    })
}
