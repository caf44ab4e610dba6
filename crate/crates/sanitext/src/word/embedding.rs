//! Word-embedding table with an exact nearest-neighbor scan.

use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// How [`load_embeddings_with`] treats a token appearing on several lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuplicatePolicy {
    /// Reject the file (default).
    Error,
    /// Keep the token's original position but overwrite its vector.
    LastWins,
}

/// A dense `|W| x d` embedding matrix with a squared-norm cache.
///
/// The nearest-neighbor projection is an exact linear scan. Desk-scale
/// tables scan in milliseconds and exactness keeps test oracles simple; the
/// norm cache turns each candidate into one dot product.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    words: Vocabulary,
    dim: usize,
    matrix: Vec<f64>,
    norms_sq: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(words: Vocabulary, rows: Vec<Vec<f64>>) -> Result<Self> {
        if words.size() != rows.len() {
            return Err(Error::LengthMismatch {
                expected: words.size(),
                got: rows.len(),
            });
        }
        if rows.len() < 2 {
            return Err(Error::InvalidInput(
                "embedding table needs at least 2 entries".into(),
            ));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension is zero".into()));
        }
        let mut matrix = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "row {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite value in row {i}")));
            }
            matrix.extend_from_slice(row);
        }
        let norms_sq = (0..rows.len())
            .map(|i| matrix[i * dim..(i + 1) * dim].iter().map(|x| x * x).sum())
            .collect();
        Ok(Self {
            words,
            dim,
            matrix,
            norms_sq,
        })
    }

    pub fn words(&self) -> &Vocabulary {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.size()
    }

    pub fn is_empty(&self) -> bool {
        self.words.size() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.matrix[id * self.dim..(id + 1) * self.dim]
    }

    /// Euclidean distance between two table entries.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Exact nearest entry to `v` under Euclidean distance, ties broken by
    /// lowest id. This scan is the module's hot kernel: the cached squared
    /// norms reduce each candidate to `||w||^2 - 2 <v, w>`.
    pub fn nearest(&self, v: &[f64]) -> Result<usize> {
        if v.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite query vector".into()));
        }
        let mut best = 0usize;
        let mut best_score = f64::INFINITY;
        for i in 0..self.len() {
            let row = self.row(i);
            let dot: f64 = row.iter().zip(v).map(|(w, x)| w * x).sum();
            let score = self.norms_sq[i] - 2.0 * dot;
            if score < best_score {
                best_score = score;
                best = i;
            }
        }
        Ok(best)
    }
}

/// Parses a plain-text embedding file, one `token v1 ... vd` line per entry,
/// file order becoming id order. Duplicate tokens are rejected.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    load_embeddings_with(path, DuplicatePolicy::Error)
}

/// [`load_embeddings`] with an explicit duplicate-token policy.
pub fn load_embeddings_with(path: &Path, on_dup: DuplicatePolicy) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path)?;
    let mut tokens: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "missing token".into(),
            })?
            .to_string();
        let values: std::result::Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if values.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("token {token:?} has no vector"),
            });
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("dimension {} does not match {d}", values.len()),
                });
            }
            _ => {}
        }
        if let Some(pos) = tokens.iter().position(|t| t == &token) {
            match on_dup {
                DuplicatePolicy::Error => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("duplicate token {token:?}"),
                    });
                }
                DuplicatePolicy::LastWins => {
                    rows[pos] = values;
                    continue;
                }
            }
        }
        tokens.push(token);
        rows.push(values);
    }
    EmbeddingTable::new(Vocabulary::from_tokens(tokens)?, rows)
}
