//! The three word-level mechanisms: additive embedding noise under the
//! Euclidean metric, its regularized-Mahalanobis extension, and truncated
//! exponential-mechanism word selection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::report::{Epsilon, Granularity, PrivacyReport};
use crate::rng::RngStream;
use crate::scorer::{join_tokens, word_tokens};
use crate::corpus::Document;
use crate::decode::SanitizedDocument;
use crate::word::{sample_planar_laplace, EmbeddingTable};

/// Word-level mechanism selector with its per-mechanism parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WordMechanism {
    Madlib,
    /// `lambda` in `[0, 1]` interpolates between the identity metric and the
    /// table's sample covariance.
    Mahalanobis { lambda: f64 },
    /// `gamma > 0` is the distance threshold beyond which candidates are
    /// collapsed into one aggregate tail outcome.
    Tem { gamma: f64 },
}

impl WordMechanism {
    pub fn name(&self) -> &'static str {
        match self {
            WordMechanism::Madlib => "madlib",
            WordMechanism::Mahalanobis { .. } => "mahalanobis",
            WordMechanism::Tem { .. } => "tem",
        }
    }
}

/// Runs one word-level mechanism over a document.
pub fn sanitize_words(
    doc: &Document,
    table: &EmbeddingTable,
    epsilon: f64,
    mechanism: &WordMechanism,
    rng: &mut RngStream,
) -> Result<SanitizedDocument> {
    match *mechanism {
        WordMechanism::Madlib => madlib_sanitize(doc, table, epsilon, rng),
        WordMechanism::Mahalanobis { lambda } => {
            mahalanobis_sanitize(doc, table, epsilon, lambda, rng)
        }
        WordMechanism::Tem { gamma } => tem_sanitize(doc, table, epsilon, gamma, rng),
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

/// Per-word rewrite driver: applies `replace` to every in-table token and
/// passes the rest through, counting them.
fn rewrite_words(
    doc: &Document,
    table: &EmbeddingTable,
    mut replace: impl FnMut(usize) -> Result<usize>,
) -> Result<(String, usize, usize)> {
    let tokens = word_tokens(&doc.text);
    let total = tokens.len();
    let mut oov = 0usize;
    let mut out: Vec<String> = Vec::with_capacity(total);
    for tok in tokens {
        match table.words().id_of(&tok) {
            Some(id) => {
                let new_id = replace(id as usize)?;
                out.push(
                    table
                        .words()
                        .token(new_id as u32)
                        .expect("nearest id in range")
                        .to_string(),
                );
            }
            None => {
                oov += 1;
                out.push(tok);
            }
        }
    }
    Ok((join_tokens(&out), total, oov))
}

fn word_report(
    mechanism: &str,
    epsilon: f64,
    token_count: usize,
    oov_count: usize,
) -> PrivacyReport {
    PrivacyReport::new(mechanism, Granularity::Word, Epsilon::Bounded(epsilon))
        .with_param("token_count", token_count as u64)
        .with_param("oov_count", oov_count as u64)
        // Passthrough tokens are released verbatim and receive no guarantee.
        .with_param("oov_passthrough_unprotected", true)
        .with_param("metric", "euclidean")
}

/// Perturbs each in-table word with planar Laplace noise and projects back
/// to the nearest vocabulary word.
pub fn madlib_sanitize(
    doc: &Document,
    table: &EmbeddingTable,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<SanitizedDocument> {
    check_epsilon(epsilon)?;
    let d = table.dim();
    let (text, total, oov) = rewrite_words(doc, table, |id| {
        let noise = sample_planar_laplace(d, epsilon, rng)?;
        let noisy: Vec<f64> = table.row(id).iter().zip(&noise).map(|(x, z)| x + z).collect();
        table.nearest(&noisy)
    })?;
    Ok(SanitizedDocument {
        source_doc_id: doc.doc_id.clone(),
        text,
        token_ids: Vec::new(),
        report: word_report("madlib", epsilon, total, oov),
    })
}

/// `lambda * Sigma + (1 - lambda) * I`, where `Sigma` is the sample
/// covariance of the embedding rows. Symmetric by construction and positive
/// definite for `lambda < 1`.
pub fn regularized_covariance(table: &EmbeddingTable, lambda: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    let n = table.len();
    let d = table.dim();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(table.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov: DMatrix<f64> = DMatrix::zeros(d, d);
    for i in 0..n {
        let row = table.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    let denom = (n - 1) as f64;
    let mut out: DMatrix<f64> = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s = lambda * cov[(a, b)] / denom + if a == b { 1.0 - lambda } else { 0.0 };
            out[(a, b)] = s;
            out[(b, a)] = s;
        }
    }
    Ok(out)
}

/// Symmetric positive-definite square root via eigendecomposition.
fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
        return Err(Error::InvalidParameter(
            "regularized covariance is not positive definite".into(),
        ));
    }
    let sqrt_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(&eig.eigenvectors * sqrt_vals * eig.eigenvectors.transpose())
}

/// Madlib with the noise shaped by the regularized covariance metric: the
/// planar Laplace draw is multiplied by the matrix square root of
/// [`regularized_covariance`], so `lambda = 0` reduces to the Euclidean
/// mechanism exactly.
pub fn mahalanobis_sanitize(
    doc: &Document,
    table: &EmbeddingTable,
    epsilon: f64,
    lambda: f64,
    rng: &mut RngStream,
) -> Result<SanitizedDocument> {
    check_epsilon(epsilon)?;
    let d = table.dim();
    let m_sqrt = spd_sqrt(&regularized_covariance(table, lambda)?)?;
    let (text, total, oov) = rewrite_words(doc, table, |id| {
        let z0 = sample_planar_laplace(d, epsilon, rng)?;
        let z = &m_sqrt * DMatrix::from_column_slice(d, 1, &z0);
        let noisy: Vec<f64> = table
            .row(id)
            .iter()
            .enumerate()
            .map(|(i, x)| x + z[(i, 0)])
            .collect();
        table.nearest(&noisy)
    })?;
    let report = word_report("mahalanobis", epsilon, total, oov).with_param("lambda", lambda);
    Ok(SanitizedDocument {
        source_doc_id: doc.doc_id.clone(),
        text,
        token_ids: Vec::new(),
        report,
    })
}

fn gumbel(rng: &mut RngStream) -> f64 {
    // Inverse-CDF; next_f64 is in [0, 1), guard the log at u = 0.
    let u = rng.next_f64().max(f64::MIN_POSITIVE);
    -(-u.ln()).ln()
}

/// Selects the replacement for one word by the truncated exponential
/// mechanism and returns the chosen table id.
///
/// Candidates within `gamma` of the word score utility `-distance`; all
/// words beyond `gamma` collapse into one aggregate tail candidate whose
/// utility is `-gamma + (2/epsilon) * ln(tail_size)`, the log-cardinality
/// adjustment that makes the aggregate carry exactly the weight of its
/// members at the truncation boundary. Selection is Gumbel-max over
/// `epsilon * utility / 2`; when the tail candidate wins, the output is a
/// uniform draw from the tail.
fn tem_select(
    word_id: usize,
    table: &EmbeddingTable,
    epsilon: f64,
    gamma: f64,
    rng: &mut RngStream,
) -> usize {
    let mut in_range: Vec<(usize, f64)> = Vec::new();
    let mut tail: Vec<usize> = Vec::new();
    for j in 0..table.len() {
        let dist = table.distance(word_id, j);
        if dist <= gamma {
            in_range.push((j, dist));
        } else {
            tail.push(j);
        }
    }

    let mut best_score = f64::NEG_INFINITY;
    let mut best: Option<usize> = None; // None marks the aggregate tail
    for &(j, dist) in &in_range {
        let score = -epsilon * dist / 2.0 + gumbel(rng);
        if score > best_score {
            best_score = score;
            best = Some(j);
        }
    }
    if !tail.is_empty() {
        let score = -epsilon * gamma / 2.0 + (tail.len() as f64).ln() + gumbel(rng);
        if score > best_score {
            best = None;
        }
    } else if best.is_none() {
        // No tail and no in-range candidate can only mean gamma excluded
        // everything but the word itself was also excluded numerically;
        // fall back to identity.
        return word_id;
    }
    match best {
        Some(j) => j,
        None => {
            use rand::Rng;
            tail[rng.random_range(0..tail.len())]
        }
    }
}

/// Word selection by the truncated exponential mechanism: nearby words
/// compete with utility `-distance`, distant words are represented by one
/// aggregate candidate and drawn uniformly if that candidate wins.
pub fn tem_sanitize(
    doc: &Document,
    table: &EmbeddingTable,
    epsilon: f64,
    gamma: f64,
    rng: &mut RngStream,
) -> Result<SanitizedDocument> {
    check_epsilon(epsilon)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    let (text, total, oov) = rewrite_words(doc, table, |id| {
        Ok(tem_select(id, table, epsilon, gamma, rng))
    })?;
    let report = word_report("tem", epsilon, total, oov).with_param("gamma", gamma);
    Ok(SanitizedDocument {
        source_doc_id: doc.doc_id.clone(),
        text,
        token_ids: Vec::new(),
        report,
    })
}
