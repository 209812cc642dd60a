//! Nearest-neighbour explanation baseline.
//!
//! Diffs are bag-of-words term-frequency vectors over whitespace tokens
//! (case-sensitive, no stop words). A query retrieves the `k` stored diffs
//! with the highest cosine similarity, then returns the message of the one
//! whose diff scores the highest BLEU-4 against the query diff.
//!
//! Cosine ranking compares exact integer quantities, so ties are real ties
//! and always go to the lower index.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{bleu_from_tokens, bleu_tokens, BleuConfig};

pub const DEFAULT_K: usize = 5;

/// Describes the retrieval method in provenance output.
pub const METHOD: &str = "bag-of-words term frequency (whitespace tokens, case-sensitive), cosine top-k, BLEU-4 rerank";

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot build an index from zero examples")]
    EmptyInput,
    #[error("index file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sparse term-frequency vector: (column, count) sorted by column.
pub type TermVector = Vec<(usize, u64)>;

/// One stored training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub diff: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalIndex {
    vocabulary: Vec<String>,
    columns: HashMap<String, usize>,
    vectors: Vec<TermVector>,
    norms_sq: Vec<u128>,
    entries: Vec<IndexEntry>,
}

fn norm_sq(v: &TermVector) -> u128 {
    v.iter().map(|&(_, c)| u128::from(c) * u128::from(c)).sum()
}

fn dot(a: &TermVector, b: &TermVector) -> u128 {
    let (mut i, mut j, mut sum) = (0, 0, 0u128);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                sum += u128::from(a[i].1) * u128::from(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

/// Exact cosine, as the pair (dot, |q|²·|v|²); zero norms give cosine 0.
#[derive(Debug, Clone, Copy)]
struct Cosine {
    dot: u128,
    norms: u128,
}

impl Cosine {
    fn value(self) -> f64 {
        if self.norms == 0 {
            0.0
        } else {
            self.dot as f64 / (self.norms as f64).sqrt()
        }
    }

    /// Compares dot_a/sqrt(n_a) with dot_b/sqrt(n_b) via dot_a²·n_b vs dot_b²·n_a.
    fn cmp(self, other: Cosine) -> Ordering {
        match (self.norms == 0, other.norms == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => 0u128.cmp(&other.dot),
            (false, true) => self.dot.cmp(&0),
            (false, false) => {
                let lhs = wide_mul(self.dot * self.dot, other.norms);
                let rhs = wide_mul(other.dot * other.dot, self.norms);
                lhs.cmp(&rhs)
            }
        }
    }
}

/// 256-bit product as (high, low) for overflow-free comparison.
fn wide_mul(a: u128, b: u128) -> (u128, u128) {
    let mask = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & mask);
    let (b_hi, b_lo) = (b >> 64, b & mask);
    let lo_lo = a_lo * b_lo;
    let hi_lo = a_hi * b_lo;
    let lo_hi = a_lo * b_hi;
    let hi_hi = a_hi * b_hi;
    let cross = (lo_lo >> 64) + (hi_lo & mask) + (lo_hi & mask);
    let low = (lo_lo & mask) | (cross << 64);
    let high = hi_hi + (hi_lo >> 64) + (lo_hi >> 64) + (cross >> 64);
    (high, low)
}

/// A ranked neighbour from the cosine stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbour {
    pub index: usize,
    pub cosine: f64,
}

/// The chosen explanation and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub message: String,
    /// Id of the training example the message was taken from.
    pub source_id: String,
    pub source_index: usize,
    pub cosine: f64,
    pub bleu: f64,
}

impl RetrievalIndex {
    /// Builds the index. Vocabulary columns are assigned in order of first
    /// occurrence across the diffs.
    pub fn build(entries: Vec<IndexEntry>) -> Result<RetrievalIndex, RetrievalError> {
        if entries.is_empty() {
            return Err(RetrievalError::EmptyInput);
        }
        let mut vocabulary = Vec::new();
        let mut columns = HashMap::new();
        for entry in &entries {
            for token in entry.diff.split_whitespace() {
                if !columns.contains_key(token) {
                    columns.insert(token.to_string(), vocabulary.len());
                    vocabulary.push(token.to_string());
                }
            }
        }
        let mut index = RetrievalIndex { vocabulary, columns, vectors: Vec::new(), norms_sq: Vec::new(), entries: Vec::new() };
        for entry in entries {
            let v = index.vectorize(&entry.diff);
            index.norms_sq.push(norm_sq(&v));
            index.vectors.push(v);
            index.entries.push(entry);
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn vectors(&self) -> &[TermVector] {
        &self.vectors
    }

    /// Term-frequency vector of `text` over this vocabulary; unknown tokens
    /// are ignored.
    pub fn vectorize(&self, text: &str) -> TermVector {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for token in text.split_whitespace() {
            if let Some(&col) = self.columns.get(token) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut v: TermVector = counts.into_iter().collect();
        v.sort_unstable();
        v
    }

    /// The `k` entries most cosine-similar to `query`, best first, ties to
    /// the lower index. `k` is clamped to the index size.
    pub fn nearest(&self, query: &TermVector, k: usize) -> Vec<Neighbour> {
        let k = k.clamp(1, self.len());
        let q_norm = norm_sq(query);
        let mut scored: Vec<(usize, Cosine)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, Cosine { dot: dot(query, v), norms: q_norm * self.norms_sq[i] }))
            .collect();
        scored.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored.into_iter().map(|(index, c)| Neighbour { index, cosine: c.value() }).collect()
    }

    /// Retrieves an explanation for `query_diff`.
    ///
    /// ```
    /// use sdx_core::retrieval::{IndexEntry, RetrievalIndex};
    ///
    /// let index = RetrievalIndex::build(vec![
    ///     IndexEntry { id: "a".into(), diff: "- x = 1 + x = 2".into(), message: "fix off by one".into() },
    ///     IndexEntry { id: "b".into(), diff: "+ import os".into(), message: "add import".into() },
    /// ]).unwrap();
    /// let found = index.explain("- x = 1 + x = 3", 5);
    /// assert_eq!(found.message, "fix off by one");
    /// ```
    pub fn explain(&self, query_diff: &str, k: usize) -> Explanation {
        let query = self.vectorize(query_diff);
        let k = k.clamp(1, self.len());
        let candidates: Vec<Neighbour> = if query.is_empty() {
            warn!("query shares no terms with the index; reranking the first {k} entries");
            (0..k).map(|index| Neighbour { index, cosine: 0.0 }).collect()
        } else {
            self.nearest(&query, k)
        };
        let cfg = BleuConfig::default();
        let reference = bleu_tokens(query_diff);
        let mut best: Option<(usize, f64, f64)> = None;
        for n in &candidates {
            let score = bleu_from_tokens(&bleu_tokens(&self.entries[n.index].diff), &reference, &cfg);
            let better = match best {
                None => true,
                Some((bi, bs, _)) => score > bs || (score == bs && n.index < bi),
            };
            if better {
                best = Some((n.index, score, n.cosine));
            }
        }
        let (index, bleu, cosine) = best.expect("k >= 1 candidates");
        let entry = &self.entries[index];
        Explanation { message: entry.message.clone(), source_id: entry.id.clone(), source_index: index, cosine, bleu }
    }

    /// Writes the index as NDJSON: a vocabulary row, then one row per entry.
    pub fn store<W: Write>(&self, mut out: W) -> Result<(), RetrievalError> {
        let header = VocabularyRow { vocabulary: self.vocabulary.clone() };
        serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        for (entry, vector) in self.entries.iter().zip(&self.vectors) {
            let row = EntryRow { id: entry.id.clone(), diff: entry.diff.clone(), message: entry.message.clone(), vector: vector.clone() };
            serde_json::to_writer(&mut out, &row).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads an index written by [`store`](Self::store). Stored vectors must
    /// agree with the vocabulary and diffs.
    pub fn load<R: BufRead>(input: R) -> Result<RetrievalIndex, RetrievalError> {
        let mut lines = input.lines().enumerate();
        let fmt = |line: usize, message: String| RetrievalError::Format { line, message };
        let (_, first) = lines.next().ok_or_else(|| fmt(1, "missing vocabulary row".into()))?;
        let header: VocabularyRow = serde_json::from_str(&first?).map_err(|e| fmt(1, e.to_string()))?;
        let mut entries = Vec::new();
        let mut stored_vectors = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: EntryRow = serde_json::from_str(&line).map_err(|e| fmt(i + 1, e.to_string()))?;
            stored_vectors.push((i + 1, row.vector));
            entries.push(IndexEntry { id: row.id, diff: row.diff, message: row.message });
        }
        let index = RetrievalIndex::build(entries)?;
        if index.vocabulary != header.vocabulary {
            return Err(fmt(1, "vocabulary does not match the stored diffs".into()));
        }
        for ((line, stored), built) in stored_vectors.iter().zip(&index.vectors) {
            if stored != built {
                return Err(fmt(*line, "term vector does not match its diff".into()));
            }
        }
        Ok(index)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyRow {
    vocabulary: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRow {
    id: String,
    diff: String,
    message: String,
    vector: TermVector,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, diff: &str, message: &str) -> IndexEntry {
        IndexEntry { id: id.into(), diff: diff.into(), message: message.into() }
    }

    #[test]
    fn term_frequencies_in_first_occurrence_order() {
        let index = RetrievalIndex::build(vec![entry("1", "a b a", "m")]).unwrap();
        assert_eq!(index.vocabulary(), ["a", "b"]);
        assert_eq!(index.vectors()[0], vec![(0, 2), (1, 1)]);
    }

    #[test]
    fn empty_index_is_rejected() {
        assert!(matches!(RetrievalIndex::build(vec![]), Err(RetrievalError::EmptyInput)));
    }

    #[test]
    fn duplicates_are_kept_and_ties_go_low() {
        let index = RetrievalIndex::build(vec![entry("1", "x y", "first"), entry("2", "x y", "second")]).unwrap();
        assert_eq!(index.len(), 2);
        let e = index.explain("x y", 5);
        assert_eq!((e.message.as_str(), e.source_index), ("first", 0));
    }

    #[test]
    fn self_query_returns_own_message() {
        let index = RetrievalIndex::build(vec![
            entry("1", "- foo ( ) + bar ( )", "rename foo"),
            entry("2", "+ import sys", "import sys"),
            entry("3", "- return None + return 0", "return zero"),
        ])
        .unwrap();
        let e = index.explain("+ import sys", 5);
        assert_eq!(e.source_id, "2");
        assert_eq!(e.cosine, 1.0);
        assert_eq!(e.bleu, 100.0);
    }

    #[test]
    fn unknown_terms_fall_back_to_first_entries() {
        let index = RetrievalIndex::build(vec![entry("1", "a", "one"), entry("2", "b", "two")]).unwrap();
        let e = index.explain("zzz", 1);
        assert_eq!(e.source_index, 0);
    }

    #[test]
    fn store_and_load() {
        let index = RetrievalIndex::build(vec![entry("1", "a b a", "m1"), entry("2", "c \"q\" a", "m2")]).unwrap();
        let mut buf = Vec::new();
        index.store(&mut buf).unwrap();
        let back = RetrievalIndex::load(buf.as_slice()).unwrap();
        assert_eq!(back, index);
    }

    #[test]
    fn load_rejects_tampered_vectors() {
        let text = "{\"vocabulary\":[\"a\"]}\n{\"id\":\"1\",\"diff\":\"a\",\"message\":\"m\",\"vector\":[[0,2]]}\n";
        assert!(matches!(RetrievalIndex::load(text.as_bytes()), Err(RetrievalError::Format { line: 2, .. })));
    }

    #[test]
    fn wide_multiplication() {
        assert_eq!(wide_mul(u128::MAX, 2), (1, u128::MAX - 1));
        assert_eq!(wide_mul(3, 5), (0, 15));
    }
}
