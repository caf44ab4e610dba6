//! Classification metrics: macro-averaged F1 and the analytic expectation
//! for a uniformly random classifier.

use crate::error::{Error, Result};

/// Unweighted mean of per-class F1 over the declared class set
/// `0..n_classes`.
///
/// A class absent from both predictions and labels has no true positives,
/// false positives, or false negatives; by convention it contributes 0 to
/// the average.
pub fn macro_f1(predictions: &[u32], labels: &[u32], n_classes: usize) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidInput("empty prediction set".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if n_classes == 0 {
        return Err(Error::InvalidParameter("n_classes must be positive".into()));
    }
    let mut tp = vec![0u64; n_classes];
    let mut fp = vec![0u64; n_classes];
    let mut fn_ = vec![0u64; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p as usize >= n_classes || l as usize >= n_classes {
            return Err(Error::InvalidInput(format!(
                "label {} outside declared set of {n_classes} classes",
                p.max(l)
            )));
        }
        if p == l {
            tp[p as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fn_[l as usize] += 1;
        }
    }
    let mut sum = 0.0;
    for c in 0..n_classes {
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom > 0 {
            sum += 2.0 * tp[c] as f64 / denom as f64;
        }
    }
    Ok(sum / n_classes as f64)
}

/// Expected macro-F1 of a classifier predicting uniformly at random, given
/// the class fractions `p_0..p_{l-1}`:
///
/// ```text
/// (1/l) * sum_i 2 p_i / (1 + p_i * l)
/// ```
pub fn expected_random_f1(class_fractions: &[f64]) -> Result<f64> {
    let l = class_fractions.len();
    if l == 0 {
        return Err(Error::InvalidInput("empty class fractions".into()));
    }
    let mut sum = 0.0;
    for &p in class_fractions {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "class fraction {p} outside [0, 1]"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "class fractions sum to {sum}, expected 1"
        )));
    }
    let l_f = l as f64;
    Ok(class_fractions
        .iter()
        .map(|&p| 2.0 * p / (1.0 + p * l_f))
        .sum::<f64>()
        / l_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;
    use rand::Rng;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0];
        assert_eq!(macro_f1(&y, &y, 3).unwrap(), 1.0);
    }

    #[test]
    fn all_positive_on_balanced_binary() {
        // Class 0 gets F1 = 0, class 1 gets 2/3, macro = 1/3.
        let labels = [0, 0, 1, 1];
        let preds = [1, 1, 1, 1];
        let f1 = macro_f1(&preds, &labels, 2).unwrap();
        assert!((f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absent_class_contributes_zero() {
        // All samples are class 0, predicted perfectly, but the declared set
        // has two classes: macro = (1 + 0) / 2.
        let labels = [0, 0, 0];
        let preds = [0, 0, 0];
        assert_eq!(macro_f1(&preds, &labels, 2).unwrap(), 0.5);
    }

    #[test]
    fn permutation_and_relabeling_invariance() {
        let labels = [0u32, 1, 2, 2, 1, 0, 1];
        let preds = [0u32, 2, 2, 1, 1, 0, 0];
        let base = macro_f1(&preds, &labels, 3).unwrap();

        // Sample order permutation.
        let perm = [6usize, 0, 3, 2, 5, 1, 4];
        let p2: Vec<u32> = perm.iter().map(|&i| preds[i]).collect();
        let l2: Vec<u32> = perm.iter().map(|&i| labels[i]).collect();
        assert_eq!(macro_f1(&p2, &l2, 3).unwrap(), base);

        // Consistent class relabeling (0->2, 1->0, 2->1).
        let relabel = |x: u32| (x + 2) % 3;
        let p3: Vec<u32> = preds.iter().map(|&x| relabel(x)).collect();
        let l3: Vec<u32> = labels.iter().map(|&x| relabel(x)).collect();
        assert!((macro_f1(&p3, &l3, 3).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_input() {
        assert!(macro_f1(&[], &[], 2).is_err());
        assert!(macro_f1(&[0], &[0, 1], 2).is_err());
        assert!(macro_f1(&[5], &[0], 2).is_err());
    }

    #[test]
    fn random_baseline_balanced_binary() {
        assert_eq!(expected_random_f1(&[0.5, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn random_baseline_uniform_ten_class() {
        let f = expected_random_f1(&vec![0.1; 10]).unwrap();
        assert!((f - 0.1).abs() < 1e-15, "{f}");
    }

    #[test]
    fn random_baseline_skewed_binary() {
        // (1/2) * (1.5/2.5 + 0.5/1.5) = 0.466(6).
        let f = expected_random_f1(&[0.75, 0.25]).unwrap();
        assert!((f - 0.4666666666666667).abs() < 1e-12);
    }

    #[test]
    fn random_baseline_uniform_equals_reciprocal() {
        // Algebraic identity: uniform fractions give exactly 1/l. Floating
        // accumulation can leave the sum a couple of ulps off, so the
        // assertion is at machine precision rather than bitwise equality.
        for l in 2..=20usize {
            let f = expected_random_f1(&vec![1.0 / l as f64; l]).unwrap();
            let expect = 1.0 / l as f64;
            assert!(
                (f - expect).abs() <= 2.0 * f64::EPSILON,
                "l={l}: {f} vs {expect}"
            );
        }
    }

    #[test]
    fn random_baseline_rejects_non_simplex() {
        assert!(expected_random_f1(&[]).is_err());
        assert!(expected_random_f1(&[0.5, 0.6]).is_err());
        assert!(expected_random_f1(&[-0.1, 1.1]).is_err());
    }

    #[test]
    fn monte_carlo_agreement_with_formula() {
        // A uniform random predictor's empirical macro-F1 over 1e5 samples
        // lands within 0.01 of the analytic value, for several label
        // distributions including the balanced binary and uniform 10-class.
        let distributions: Vec<Vec<f64>> = vec![
            vec![0.5, 0.5],
            vec![0.1; 10],
            vec![0.75, 0.25],
            vec![0.6, 0.3, 0.1],
            vec![0.4, 0.3, 0.2, 0.1],
        ];
        let mut rng = make_rng(3000, 0);
        for fracs in distributions {
            let l = fracs.len();
            let n = 100_000;
            let mut labels = Vec::with_capacity(n);
            for (c, &p) in fracs.iter().enumerate() {
                let count = (p * n as f64).round() as usize;
                labels.extend(std::iter::repeat_n(c as u32, count));
            }
            labels.truncate(n);
            let preds: Vec<u32> = (0..labels.len())
                .map(|_| rng.random_range(0..l as u32))
                .collect();
            let empirical = macro_f1(&preds, &labels, l).unwrap();
            let fracs_actual: Vec<f64> = (0..l)
                .map(|c| labels.iter().filter(|&&x| x == c as u32).count() as f64 / labels.len() as f64)
                .collect();
            let analytic = expected_random_f1(&fracs_actual).unwrap();
            assert!(
                (empirical - analytic).abs() < 0.01,
                "fracs {fracs:?}: empirical {empirical}, analytic {analytic}"
            );
        }
    }
}
