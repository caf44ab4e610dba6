//! Word-level metric-DP mechanisms over a word-embedding table.
//!
//! Each mechanism rewrites a document token by token: in-table words are
//! perturbed in embedding space (or selected by an exponential mechanism)
//! and mapped back to words; out-of-table tokens pass through unchanged and
//! are tallied in the privacy report, since passthrough words receive no
//! protection. The epsilon recorded for these mechanisms is the per-word
//! metric-DP parameter: the guarantee scales with the embedding-space
//! distance between the words being exchanged.

mod embedding;
mod mechanisms;

pub use embedding::{load_embeddings, load_embeddings_with, DuplicatePolicy, EmbeddingTable};
pub use mechanisms::{
    madlib_sanitize, mahalanobis_sanitize, regularized_covariance, sanitize_words, tem_sanitize,
    WordMechanism,
};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Draws from the d-dimensional distribution with density proportional to
/// `exp(-epsilon * ||z||)`: a uniform direction on the unit sphere scaled by
/// a Gamma(d, 1/epsilon) radius. The expected norm is `d / epsilon`.
pub fn sample_planar_laplace(d: usize, epsilon: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let mut direction: Vec<f64>;
    loop {
        direction = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut direction {
                *x /= norm;
            }
            break;
        }
    }
    let radius = Gamma::new(d as f64, 1.0 / epsilon)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    for x in &mut direction {
        *x *= radius;
    }
    Ok(direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    #[test]
    fn mean_norm_matches_gamma_identity() {
        // E[||z||] = d / epsilon = 50 / 5 = 10.
        let mut rng = make_rng(41, 0);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| {
                let z = sample_planar_laplace(50, 5.0, &mut rng).unwrap();
                z.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.02, "mean norm {mean}");
    }

    #[test]
    fn huge_epsilon_collapses_noise() {
        let mut rng = make_rng(42, 0);
        for _ in 0..200 {
            let z = sample_planar_laplace(50, 1e6, &mut rng).unwrap();
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm < 1e-3, "norm {norm}");
        }
    }

    #[test]
    fn coordinates_are_centered() {
        // Spherical symmetry: each coordinate mean is 0 within 3 sigma.
        let d = 8;
        let eps = 2.0;
        let n = 100_000;
        let mut rng = make_rng(45, 0);
        let mut sums = vec![0.0; d];
        let mut sq_sums = vec![0.0; d];
        for _ in 0..n {
            let z = sample_planar_laplace(d, eps, &mut rng).unwrap();
            for (i, x) in z.iter().enumerate() {
                sums[i] += x;
                sq_sums[i] += x * x;
            }
        }
        for i in 0..d {
            let mean = sums[i] / n as f64;
            let var = sq_sums[i] / n as f64 - mean * mean;
            let sigma_of_mean = (var / n as f64).sqrt();
            assert!(
                mean.abs() <= 3.0 * sigma_of_mean,
                "coordinate {i} mean {mean} exceeds 3-sigma {sigma_of_mean}"
            );
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = make_rng(44, 0);
        assert!(sample_planar_laplace(0, 1.0, &mut rng).is_err());
        assert!(sample_planar_laplace(3, 0.0, &mut rng).is_err());
        assert!(sample_planar_laplace(3, -1.0, &mut rng).is_err());
    }
}
