//! Feature extraction for the desk-scale attackers.
//!
//! Text access uses tf-idf over token unigrams and bigrams with smoothed
//! inverse document frequency
//!
//! ```text
//! idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1
//! ```
//!
//! and L2-normalized rows. The vectorizer is fitted on training documents
//! only and then applied to validation and test sets, so no statistic of
//! held-out data leaks into the features. Embedding access passes provided
//! vectors through unchanged.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scorer::word_tokens;

/// One feature row as sorted `(feature_id, value)` pairs.
pub type SparseVec = Vec<(u32, f64)>;

/// A set of feature rows over a fixed-width feature space.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub rows: Vec<SparseVec>,
    pub n_features: usize,
}

impl FeatureMatrix {
    /// Wraps dense vectors (embedding access) as feature rows verbatim.
    pub fn from_dense(vectors: &[Vec<f64>]) -> Result<Self> {
        let n_features = vectors.first().map(Vec::len).unwrap_or(0);
        let mut rows = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != n_features {
                return Err(Error::LengthMismatch {
                    expected: n_features,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite vector at row {i}")));
            }
            rows.push(
                v.iter()
                    .enumerate()
                    .map(|(j, &x)| (j as u32, x))
                    .collect(),
            );
        }
        Ok(Self { rows, n_features })
    }
}

fn terms_of(text: &str) -> Vec<String> {
    let words = word_tokens(text);
    let mut terms = words.clone();
    terms.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    terms
}

/// Unigram+bigram tf-idf vectorizer with train-only fitting.
#[derive(Debug, Clone, Default)]
pub struct TfIdfVectorizer {
    vocab: HashMap<String, u32>,
    idf: Vec<f64>,
}

impl TfIdfVectorizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_fitted(&self) -> bool {
        !self.idf.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    /// Learns the term vocabulary and document frequencies from training
    /// text. Term ids are assigned in sorted term order for determinism.
    pub fn fit<S: AsRef<str>>(&mut self, train_docs: &[S]) -> Result<()> {
        if train_docs.is_empty() {
            return Err(Error::InvalidInput("cannot fit tf-idf on no documents".into()));
        }
        let mut df: HashMap<String, u64> = HashMap::new();
        for doc in train_docs {
            let mut terms = terms_of(doc.as_ref());
            terms.sort();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut sorted: Vec<(String, u64)> = df.into_iter().collect();
        sorted.sort();
        let n = train_docs.len() as f64;
        self.vocab = HashMap::with_capacity(sorted.len());
        self.idf = Vec::with_capacity(sorted.len());
        for (id, (term, count)) in sorted.into_iter().enumerate() {
            self.vocab.insert(term, id as u32);
            self.idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
        Ok(())
    }

    /// Maps documents into the fitted feature space; terms unseen at fit
    /// time are dropped. Rows are L2-normalized.
    pub fn transform<S: AsRef<str>>(&self, docs: &[S]) -> Result<FeatureMatrix> {
        if !self.is_fitted() {
            return Err(Error::InvalidInput(
                "tf-idf transform called before fit".into(),
            ));
        }
        let mut rows = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut counts: HashMap<u32, f64> = HashMap::new();
            for term in terms_of(doc.as_ref()) {
                if let Some(&id) = self.vocab.get(&term) {
                    *counts.entry(id).or_insert(0.0) += 1.0;
                }
            }
            let mut row: SparseVec = counts
                .into_iter()
                .map(|(id, tf)| (id, tf * self.idf[id as usize]))
                .collect();
            row.sort_unstable_by_key(|&(id, _)| id);
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, v) in &mut row {
                    *v /= norm;
                }
            }
            rows.push(row);
        }
        Ok(FeatureMatrix {
            rows,
            n_features: self.idf.len(),
        })
    }
}
