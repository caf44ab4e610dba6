//! Sentence-level truncated-Laplace mechanism over precomputed embeddings.
//!
//! Embeddings are ingested from files, never computed here: the toolkit is
//! agnostic about what produced them. Truncation bounds come from public
//! data as per-dimension quantiles (min/max by default). The mechanism is
//! clamp–noise–clamp: the input is clamped into the bounds, independent
//! Laplace noise with scale `sensitivity / epsilon` is added per dimension,
//! and the result is clamped again so outputs always lie inside the bounds.
//! The L1 sensitivity of the clamped embedding is the sum of per-dimension
//! widths, which calibrates the per-dimension scale under the standard
//! Laplace-mechanism argument.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Epsilon, Granularity, PrivacyReport};
use crate::rng::RngStream;

/// A document's sentence embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEmbedding {
    pub doc_id: String,
    pub vector: Vec<f64>,
}

impl SentenceEmbedding {
    pub fn new(doc_id: &str, vector: Vec<f64>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::InvalidInput(format!(
                "embedding for {doc_id:?} is empty"
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite embedding entry for {doc_id:?}"
            )));
        }
        Ok(Self {
            doc_id: doc_id.to_string(),
            vector,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Per-dimension truncation interval learned from public embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TruncationBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!(
                    "bad truncation interval [{lo}, {hi}] at dimension {i}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// L1 sensitivity of the clamped embedding: the sum of widths.
    pub fn sensitivity(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .sum()
    }

    pub fn clamp(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&lo, &hi))| x.clamp(lo, hi))
            .collect())
    }

    /// Writes bounds as a two-row matrix with a dimension header.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("# sanitext trunc-bounds v1 dim={}\n", self.dim()));
        for row in [&self.lower, &self.upper] {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            rows.push(row.map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?);
        }
        if rows.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "expected 2 matrix rows, got {}",
                rows.len()
            )));
        }
        let upper = rows.pop().expect("two rows");
        let lower = rows.pop().expect("one row");
        Self::new(lower, upper)
    }
}

/// Linear-interpolation empirical quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Learns per-dimension truncation bounds as empirical quantiles of the
/// public embeddings. The defaults `q_low = 0`, `q_high = 1` take the
/// coordinate-wise minimum and maximum.
pub fn learn_truncation_bounds(
    public: &[SentenceEmbedding],
    q_low: f64,
    q_high: f64,
) -> Result<TruncationBounds> {
    if public.is_empty() {
        return Err(Error::InvalidInput(
            "cannot learn truncation bounds from an empty public set".into(),
        ));
    }
    if !(0.0..=1.0).contains(&q_low) || !(0.0..=1.0).contains(&q_high) || q_low >= q_high {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= q_low < q_high <= 1, got ({q_low}, {q_high})"
        )));
    }
    let dim = public[0].dim();
    for e in public {
        if e.dim() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: e.dim(),
            });
        }
    }
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    let mut column = vec![0.0; public.len()];
    for j in 0..dim {
        for (i, e) in public.iter().enumerate() {
            column[i] = e.vector[j];
        }
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, q_low));
        upper.push(quantile_sorted(&column, q_high));
    }
    TruncationBounds::new(lower, upper)
}

fn laplace(scale: f64, rng: &mut RngStream) -> f64 {
    // Inverse CDF from a symmetric uniform; guard the log endpoint.
    let u = rng.next_f64() - 0.5;
    let mag = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    -scale * u.signum() * mag.ln()
}

/// One truncated-Laplace draw with the pre-clamp intermediate kept for
/// statistical verification.
#[derive(Debug, Clone)]
pub struct TruncatedLaplaceSample {
    pub output: SentenceEmbedding,
    /// Clamped input plus noise, before the final clamp.
    pub pre_clamp: Vec<f64>,
    pub report: PrivacyReport,
}

/// Clamp–noise–clamp with per-dimension Laplace scale
/// `bounds.sensitivity() / epsilon`; exposes the pre-clamp intermediate.
pub fn truncated_laplace_parts(
    e: &SentenceEmbedding,
    bounds: &TruncationBounds,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<TruncatedLaplaceSample> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let sensitivity = bounds.sensitivity();
    if sensitivity <= 0.0 {
        return Err(Error::InvalidParameter(
            "truncation bounds have zero sensitivity; the mechanism is undefined".into(),
        ));
    }
    let clamped = bounds.clamp(&e.vector)?;
    let scale = sensitivity / epsilon;
    let pre_clamp: Vec<f64> = clamped.iter().map(|&x| x + laplace(scale, rng)).collect();
    let output = bounds.clamp(&pre_clamp)?;
    let report = PrivacyReport::new("trunc-laplace", Granularity::Sentence, Epsilon::Bounded(epsilon))
        .with_param("sensitivity", sensitivity)
        .with_param("dim", bounds.dim() as u64);
    Ok(TruncatedLaplaceSample {
        output: SentenceEmbedding {
            doc_id: e.doc_id.clone(),
            vector: output,
        },
        pre_clamp,
        report,
    })
}

/// Sanitizes one sentence embedding; the output always lies inside the
/// bounds.
pub fn truncated_laplace_sanitize(
    e: &SentenceEmbedding,
    bounds: &TruncationBounds,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<(SentenceEmbedding, PrivacyReport)> {
    let sample = truncated_laplace_parts(e, bounds, epsilon, rng)?;
    Ok((sample.output, sample.report))
}

/// Reads an embedding corpus: one `doc_id v1 ... vd` line per document.
pub fn load_sentence_embeddings(path: &Path) -> Result<Vec<SentenceEmbedding>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let doc_id = fields.next().expect("non-empty line").to_string();
        let values: std::result::Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
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
        out.push(SentenceEmbedding::new(&doc_id, values).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Writes an embedding corpus in the same layout [`load_sentence_embeddings`]
/// reads.
pub fn write_sentence_embeddings(path: &Path, embeddings: &[SentenceEmbedding]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in embeddings {
        write!(out, "{}", e.doc_id)?;
        for v in &e.vector {
            write!(out, " {v:?}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn emb(doc_id: &str, v: Vec<f64>) -> SentenceEmbedding {
        SentenceEmbedding::new(doc_id, v).unwrap()
    }

    #[test]
    fn min_max_bounds_from_two_vectors() {
        let b = learn_truncation_bounds(
            &[emb("a", vec![0.0, 1.0]), emb("b", vec![2.0, 3.0])],
            0.0,
            1.0,
        )
        .unwrap();
        assert_eq!(b.lower(), &[0.0, 1.0]);
        assert_eq!(b.upper(), &[2.0, 3.0]);
        assert_eq!(b.sensitivity(), 4.0);
    }

    #[test]
    fn single_vector_bounds_are_degenerate_and_rejected_by_mechanism() {
        let e = emb("a", vec![0.5, -1.0]);
        let b = learn_truncation_bounds(std::slice::from_ref(&e), 0.0, 1.0).unwrap();
        assert_eq!(b.sensitivity(), 0.0);
        let err = truncated_laplace_sanitize(&e, &b, 5.0, &mut make_rng(90, 0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn interquartile_bounds_match_normal_law() {
        // N(0,1) has interquartile range 2 * 0.67449 = 1.34898.
        let mut rng = make_rng(91, 0);
        let dims = 3;
        let embeddings: Vec<SentenceEmbedding> = (0..1000)
            .map(|i| {
                emb(
                    &format!("e{i}"),
                    (0..dims).map(|_| StandardNormal.sample(&mut rng)).collect(),
                )
            })
            .collect();
        let b = learn_truncation_bounds(&embeddings, 0.25, 0.75).unwrap();
        for j in 0..dims {
            let width = b.upper()[j] - b.lower()[j];
            assert!(
                (width - 1.349).abs() / 1.349 < 0.10,
                "dim {j} width {width}"
            );
        }
    }

    #[test]
    fn invalid_quantiles_rejected() {
        let set = [emb("a", vec![0.0]), emb("b", vec![1.0])];
        assert!(learn_truncation_bounds(&set, 0.5, 0.5).is_err());
        assert!(learn_truncation_bounds(&set, 0.9, 0.1).is_err());
        assert!(learn_truncation_bounds(&set, -0.1, 1.0).is_err());
        assert!(learn_truncation_bounds(&[], 0.0, 1.0).is_err());
    }

    #[test]
    fn huge_epsilon_returns_clamped_input() {
        let b = TruncationBounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let e = emb("a", vec![0.4, 7.0]); // second coordinate out of bounds
        let (out, _) = truncated_laplace_sanitize(&e, &b, 1e9, &mut make_rng(92, 0)).unwrap();
        assert!((out.vector[0] - 0.4).abs() < 1e-6);
        assert!((out.vector[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn outputs_always_inside_bounds() {
        let b = TruncationBounds::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 4.0]).unwrap();
        let e = emb("a", vec![0.0, 0.2, 3.0]);
        let mut rng = make_rng(93, 0);
        for _ in 0..10_000 {
            let (out, _) = truncated_laplace_sanitize(&e, &b, 5.0, &mut rng).unwrap();
            for (j, &x) in out.vector.iter().enumerate() {
                assert!(
                    x >= b.lower()[j] && x <= b.upper()[j],
                    "coordinate {j} escaped: {x}"
                );
            }
        }
    }

    #[test]
    fn intermediate_noise_scale_matches_laplace_variance() {
        // Per-dimension standard deviation of the pre-clamp noise must be
        // sqrt(2) * sensitivity / epsilon within 5%, and agree across
        // dimensions (exchangeability).
        let b = TruncationBounds::new(vec![0.0, 0.0, 0.0, 0.0], vec![1.0, 2.0, 0.5, 0.5]).unwrap();
        let eps = 5.0;
        let expect = std::f64::consts::SQRT_2 * b.sensitivity() / eps;
        let e = emb("a", vec![0.5, 1.0, 0.25, 0.25]);
        let clamped = b.clamp(&e.vector).unwrap();
        let mut rng = make_rng(94, 0);
        let n = 10_000;
        let mut sq = vec![0.0; 4];
        for _ in 0..n {
            let sample = truncated_laplace_parts(&e, &b, eps, &mut rng).unwrap();
            for j in 0..4 {
                let noise = sample.pre_clamp[j] - clamped[j];
                sq[j] += noise * noise;
            }
        }
        for (j, &s) in sq.iter().enumerate() {
            let std = (s / n as f64).sqrt();
            assert!(
                (std - expect).abs() / expect < 0.05,
                "dim {j}: std {std}, expect {expect}"
            );
        }
    }

    #[test]
    fn sanitizing_twice_stays_inside_bounds() {
        let b = TruncationBounds::new(vec![0.0, -2.0], vec![1.0, 2.0]).unwrap();
        let e = emb("a", vec![0.7, 0.0]);
        let mut rng = make_rng(95, 0);
        let (once, _) = truncated_laplace_sanitize(&e, &b, 2.0, &mut rng).unwrap();
        let (twice, _) = truncated_laplace_sanitize(&once, &b, 2.0, &mut rng).unwrap();
        for (j, &x) in twice.vector.iter().enumerate() {
            assert!(x >= b.lower()[j] && x <= b.upper()[j]);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let b = TruncationBounds::new(vec![0.0], vec![1.0]).unwrap();
        let e = emb("a", vec![0.5, 0.5]);
        assert!(truncated_laplace_sanitize(&e, &b, 1.0, &mut make_rng(96, 0)).is_err());
    }

    #[test]
    fn embedding_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        let set = vec![emb("d1", vec![0.5, -1.25]), emb("d2", vec![3.0, 0.125])];
        write_sentence_embeddings(&path, &set).unwrap();
        let back = load_sentence_embeddings(&path).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn bounds_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bounds.tsv");
        let b = TruncationBounds::new(vec![-0.5, 0.0], vec![0.5, 2.5]).unwrap();
        b.save(&path).unwrap();
        assert_eq!(TruncationBounds::load(&path).unwrap(), b);
    }
}
