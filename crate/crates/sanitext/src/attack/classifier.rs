//! Multinomial logistic regression trained by mini-batch gradient descent.
//!
//! This is the deliberately small, deterministic attacker family used for
//! every de-anonymization and utility measurement. Training shuffles with a
//! seeded stream, weight decay is applied exactly to the whole matrix each
//! batch, and early stopping selects the epoch with the best validation
//! macro-F1, so a fixed seed always reproduces the same decision function.

use rand::Rng;

use crate::attack::features::FeatureMatrix;
use crate::attack::metrics::macro_f1;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct LogisticHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// L2 weight decay; 0 disables it.
    pub l2: f64,
    /// Stop after this many epochs without a validation improvement and
    /// restore the best weights. `None` runs every epoch and keeps the
    /// final weights.
    pub early_stopping_patience: Option<usize>,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1.0,
            l2: 0.0,
            early_stopping_patience: Some(10),
        }
    }
}

/// Trained softmax classifier.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    n_classes: usize,
    n_features: usize,
    /// Row-major `n_classes x n_features`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl ClassifierModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn scores(&self, row: &[(u32, f64)], out: &mut [f64]) {
        out.copy_from_slice(&self.biases);
        for &(j, v) in row {
            let j = j as usize;
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.weights[c * self.n_features + j] * v;
            }
        }
    }

    /// Predicted class per row.
    ///
    /// Exact score ties (which arise when the features carry no signal at
    /// all, most visibly for the untrained zero model) are broken by a
    /// stable hash of the row position, spreading tied predictions evenly
    /// instead of collapsing onto one class. The choice is deterministic.
    pub fn predict(&self, x: &FeatureMatrix) -> Vec<u32> {
        let mut scores = vec![0.0; self.n_classes];
        x.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                self.scores(row, &mut scores);
                let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tied: Vec<usize> = (0..self.n_classes)
                    .filter(|&c| scores[c] == top)
                    .collect();
                if tied.len() == 1 {
                    tied[0] as u32
                } else {
                    let h = crate::rng::stable_hash64(&["tie", &i.to_string()]);
                    tied[(h % tied.len() as u64) as usize] as u32
                }
            })
            .collect()
    }
}

/// Fits a multinomial logistic regression on the training set, early
/// stopping on validation macro-F1 when enabled.
pub fn train_classifier(
    train_x: &FeatureMatrix,
    train_y: &[u32],
    val_x: &FeatureMatrix,
    val_y: &[u32],
    n_classes: usize,
    hyper: &LogisticHyper,
    rng: &mut RngStream,
) -> Result<ClassifierModel> {
    let n = train_x.rows.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if n != train_y.len() {
        return Err(Error::LengthMismatch {
            expected: n,
            got: train_y.len(),
        });
    }
    if val_x.rows.len() != val_y.len() {
        return Err(Error::LengthMismatch {
            expected: val_x.rows.len(),
            got: val_y.len(),
        });
    }
    if n_classes < 2 {
        return Err(Error::InvalidParameter("need at least 2 classes".into()));
    }
    {
        let mut seen = vec![false; n_classes];
        for &y in train_y {
            if y as usize >= n_classes {
                return Err(Error::InvalidInput(format!(
                    "training label {y} outside declared set"
                )));
            }
            seen[y as usize] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::InvalidInput(
                "degenerate training set: fewer than 2 classes present".into(),
            ));
        }
    }
    if hyper.batch_size == 0 || hyper.epochs == 0 {
        return Err(Error::InvalidParameter(
            "batch_size and epochs must be positive".into(),
        ));
    }

    let n_features = train_x.n_features;
    let mut model = ClassifierModel {
        n_classes,
        n_features,
        weights: vec![0.0; n_classes * n_features],
        biases: vec![0.0; n_classes],
    };

    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut since_best = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad_w = vec![0.0; n_classes * n_features]; // touched entries only
    let mut probs = vec![0.0; n_classes];

    for _epoch in 0..hyper.epochs {
        // Fisher-Yates with the run's stream keeps epochs reproducible.
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        for batch in order.chunks(hyper.batch_size) {
            let scale = hyper.learning_rate / batch.len() as f64;
            if hyper.l2 > 0.0 {
                let decay = 1.0 - hyper.learning_rate * hyper.l2;
                for w in &mut model.weights {
                    *w *= decay;
                }
            }
            let mut grad_b = vec![0.0; n_classes];
            for &i in batch {
                let row = &train_x.rows[i];
                model.scores(row, &mut probs);
                let m = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for p in probs.iter_mut() {
                    *p = (*p - m).exp();
                    z += *p;
                }
                for p in probs.iter_mut() {
                    *p /= z;
                }
                probs[train_y[i] as usize] -= 1.0;
                for &(j, v) in row {
                    let j = j as usize;
                    for (c, &g) in probs.iter().enumerate() {
                        grad_w[c * n_features + j] += g * v;
                    }
                }
                for (c, &g) in probs.iter().enumerate() {
                    grad_b[c] += g;
                }
            }
            // Apply and re-zero exactly the touched gradient entries.
            for &i in batch {
                for &(j, _) in &train_x.rows[i] {
                    let j = j as usize;
                    for c in 0..n_classes {
                        let idx = c * n_features + j;
                        model.weights[idx] -= scale * grad_w[idx];
                        grad_w[idx] = 0.0;
                    }
                }
            }
            for c in 0..n_classes {
                model.biases[c] -= scale * grad_b[c];
            }
        }

        if let Some(patience) = hyper.early_stopping_patience {
            let val_f1 = if val_y.is_empty() {
                0.0
            } else {
                macro_f1(&model.predict(val_x), val_y, n_classes)?
            };
            let improved = best.as_ref().map(|(f, _, _)| val_f1 > *f).unwrap_or(true);
            if improved {
                best = Some((val_f1, model.weights.clone(), model.biases.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }

    if let Some((_, weights, biases)) = best {
        model.weights = weights;
        model.biases = biases;
    }
    Ok(model)
}
