//! Logit vectors and per-coordinate clipping bounds.

use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Per-token real-valued scores emitted by a scorer, one entry per
/// vocabulary id.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector {
    scores: Vec<f64>,
}

impl LogitVector {
    /// Wraps raw scores; every entry must be finite.
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(bad) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite logit at index {bad}"
            )));
        }
        Ok(Self { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }
}

/// Per-coordinate clipping interval for logits.
///
/// Stored as full lower/upper vectors so bounds learned per token are
/// honored exactly; the accountant collapses them to the widest coordinate,
/// which reproduces the scalar two-sided bound when all coordinates agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ClipBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite bound at coordinate {j}"
                )));
            }
            if lo > hi {
                return Err(Error::InvalidInput(format!(
                    "lower {lo} exceeds upper {hi} at coordinate {j}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Scalar bounds broadcast over `len` coordinates.
    pub fn uniform(len: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; len], vec![upper; len])
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Widest coordinate interval; this is the quantity the accountant
    /// charges for.
    pub fn width(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }

    /// Writes the bounds as a two-row numeric matrix prefixed with a
    /// vocabulary-hash header so stale bounds cannot be reused against a
    /// different vocabulary.
    pub fn save(&self, path: &Path, vocab: &Vocabulary) -> Result<()> {
        if vocab.size() != self.len() {
            return Err(Error::LengthMismatch {
                expected: vocab.size(),
                got: self.len(),
            });
        }
        let mut out = String::new();
        out.push_str(&format!(
            "# sanitext clip-bounds v1 vocab_hash={} vocab_size={}\n",
            vocab.content_hash(),
            vocab.size()
        ));
        for row in [&self.lower, &self.upper] {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Loads bounds written by [`ClipBounds::save`], refusing files whose
    /// header hash does not match `vocab`.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: "empty clip-bounds file".into(),
            })?
            .map_err(Error::Io)?;
        let hash = header
            .split_whitespace()
            .find_map(|f| f.strip_prefix("vocab_hash="))
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: "missing vocab_hash header".into(),
            })?;
        if hash != vocab.content_hash() {
            return Err(Error::VocabularyMismatch(format!(
                "clip-bounds file was built for a different vocabulary ({} != {})",
                hash,
                vocab.content_hash()
            )));
        }
        let mut rows = Vec::with_capacity(2);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(Error::Io)?;
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            rows.push(row.map_err(|e| Error::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?);
        }
        if rows.len() != 2 {
            return Err(Error::Parse {
                line: rows.len() + 1,
                msg: format!("expected 2 matrix rows, got {}", rows.len()),
            });
        }
        let upper = rows.pop().expect("two rows");
        let lower = rows.pop().expect("one row");
        if lower.len() != vocab.size() || upper.len() != vocab.size() {
            return Err(Error::LengthMismatch {
                expected: vocab.size(),
                got: lower.len(),
            });
        }
        Self::new(lower, upper)
    }
}
