//! Differentially private token sampling.
//!
//! The engine paraphrases a document by prompting a scorer and sampling
//! every token from the full vocabulary after clipping and temperature
//! scaling the logits:
//!
//! ```text
//! context = tokenize(prompt(doc))
//! repeat up to n_tokens times:
//!     u  = scorer(context)
//!     u' = clamp(u, lower, upper) / T
//!     p  = softmax(u')
//!     v  ~ p                      (inverse-CDF over the whole vocabulary)
//!     append v to output and context
//! ```
//!
//! Clipping bounds the per-step probability ratio between any two documents
//! by `exp(2 * width / T)`, and sequential composition over the token budget
//! yields the document-level guarantee computed by
//! [`epsilon_for`](crate::accountant::epsilon_for). Disabling clipping or
//! restricting the sample space with top-k filtering voids the guarantee;
//! the attached [`PrivacyReport`] then carries an unbounded epsilon.

use serde::{Deserialize, Serialize};

use crate::accountant::epsilon_for;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::logits::{ClipBounds, LogitVector};
use crate::report::{Epsilon, Granularity, PrivacyReport};
use crate::rng::RngStream;
use crate::scorer::{detokenize, generate_prompt, tokenize, TokenScorer};
use crate::vocab::TokenId;

/// A distribution over token ids: entries in `[0, 1]` summing to 1 within
/// 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!(
                    "probability {p} at index {i} outside [0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Clamps logits into the per-coordinate bounds and divides by temperature.
/// With no bounds the logits pass through scaling only. A scorer emitting a
/// value outside the bounds is the expected case, not an error: clamping is
/// the mechanism's job.
pub fn clip_and_scale(
    u: &LogitVector,
    bounds: Option<&ClipBounds>,
    temperature: f64,
) -> Result<LogitVector> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    let scores = u.scores();
    let out: Vec<f64> = match bounds {
        Some(b) => {
            if b.len() != scores.len() {
                return Err(Error::LengthMismatch {
                    expected: scores.len(),
                    got: b.len(),
                });
            }
            scores
                .iter()
                .zip(b.lower().iter().zip(b.upper()))
                .map(|(&s, (&lo, &hi))| s.clamp(lo, hi) / temperature)
                .collect()
        }
        None => scores.iter().map(|&s| s / temperature).collect(),
    };
    LogitVector::new(out)
}

/// Numerically stable softmax: probabilities are computed in log space after
/// subtracting the maximum, so uniformly shifted inputs give identical
/// output and large magnitudes cannot overflow.
pub fn to_probabilities(scaled: &LogitVector) -> Result<ProbabilityVector> {
    let scores = scaled.scores();
    if scores.is_empty() {
        return Err(Error::InvalidInput("empty logit vector".into()));
    }
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = scores.iter().map(|&s| (s - m).exp()).sum::<f64>().ln();
    let probs = scores.iter().map(|&s| (s - m - log_z).exp()).collect();
    ProbabilityVector::new(probs)
}

/// Inverse-CDF sample over the full vocabulary, consuming exactly one draw
/// from the stream.
pub fn sample_token(p: &ProbabilityVector, rng: &mut RngStream) -> TokenId {
    let u = rng.next_f64();
    let mut cum = 0.0;
    let mut last_nonzero = 0;
    for (i, &pi) in p.probs().iter().enumerate() {
        if pi > 0.0 {
            last_nonzero = i;
        }
        cum += pi;
        if u < cum {
            return i as TokenId;
        }
    }
    // Rounding can leave cum a hair below 1; charge the tail.
    last_nonzero as TokenId
}

/// Keeps the `k` most probable tokens (ties at the boundary broken toward
/// the lowest id), zeroes the rest, and renormalizes.
///
/// Restricting the sample space this way voids the local privacy guarantee:
/// any pipeline that applies this filter reports an unbounded epsilon.
pub fn top_k_filter(p: &ProbabilityVector, k: usize) -> Result<ProbabilityVector> {
    let n = p.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "top-k must be in 1..={n}, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p.probs()[b].total_cmp(&p.probs()[a]).then(a.cmp(&b)));
    let kept = &order[..k];
    let total: f64 = kept.iter().map(|&i| p.probs()[i]).sum();
    let mut out = vec![0.0; n];
    for &i in kept {
        out[i] = p.probs()[i] / total;
    }
    ProbabilityVector::new(out)
}

/// Settings for one [`dp_prompt`] run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeParams {
    /// Prompt template; must contain `{doc}` exactly once.
    pub template: String,
    pub temperature: f64,
    /// Token budget. Privacy is always charged for the full budget, even
    /// when generation stops early at an end-of-sequence token.
    pub n_tokens: usize,
    /// Restrict sampling to the k most probable tokens. Voids the guarantee.
    pub top_k: Option<usize>,
    /// Stop when the scorer's end-of-sequence token is sampled. Off by
    /// default: the baseline decoder always runs the full budget.
    pub stop_at_eos: bool,
}

impl DecodeParams {
    pub fn new(template: &str, temperature: f64, n_tokens: usize) -> Self {
        Self {
            template: template.to_string(),
            temperature,
            n_tokens,
            top_k: None,
            stop_at_eos: false,
        }
    }
}

/// A sanitized output document with its provenance report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SanitizedDocument {
    pub source_doc_id: String,
    pub text: String,
    pub token_ids: Vec<TokenId>,
    pub report: PrivacyReport,
}

/// Paraphrases `doc` with clipped, temperature-scaled full-vocabulary
/// sampling and attaches the privacy report.
///
/// The report's epsilon is finite only when bounds are present and no top-k
/// filter ran; it is computed for the full `n_tokens` budget regardless of
/// early stopping.
pub fn dp_prompt(
    scorer: &dyn TokenScorer,
    doc: &Document,
    params: &DecodeParams,
    bounds: Option<&ClipBounds>,
    rng: &mut RngStream,
) -> Result<SanitizedDocument> {
    if params.n_tokens == 0 {
        return Err(Error::InvalidParameter(
            "n_tokens must be at least 1".into(),
        ));
    }
    if !(params.temperature > 0.0) || !params.temperature.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive and finite, got {}",
            params.temperature
        )));
    }
    if let Some(k) = params.top_k {
        if k == 0 || k > scorer.vocabulary().size() {
            return Err(Error::InvalidParameter(format!(
                "top-k must be in 1..={}, got {k}",
                scorer.vocabulary().size()
            )));
        }
    }

    let vocab = scorer.vocabulary();
    let prompt = generate_prompt(doc, &params.template)?;
    let mut context = tokenize(vocab, scorer.unk_id(), &prompt);
    let eos = scorer.eos_id();

    let mut output: Vec<TokenId> = Vec::with_capacity(params.n_tokens);
    for step in 0..params.n_tokens {
        let u = scorer.next_logits(&context).map_err(|e| Error::ScorerAt {
            step,
            source: Box::new(e),
        })?;
        if u.len() != vocab.size() {
            return Err(Error::ScorerAt {
                step,
                source: Box::new(Error::LengthMismatch {
                    expected: vocab.size(),
                    got: u.len(),
                }),
            });
        }
        let scaled = clip_and_scale(&u, bounds, params.temperature)?;
        let mut p = to_probabilities(&scaled)?;
        if let Some(k) = params.top_k {
            p = top_k_filter(&p, k)?;
        }
        let v = sample_token(&p, rng);
        if params.stop_at_eos && Some(v) == eos {
            break;
        }
        output.push(v);
        context.push(v);
    }

    let epsilon = match (bounds, params.top_k) {
        (Some(b), None) => Epsilon::Bounded(epsilon_for(b, params.temperature, params.n_tokens)?),
        _ => Epsilon::Unbounded,
    };
    let mut report = PrivacyReport::new("dp-prompt", Granularity::Document, epsilon)
        .with_param("temperature", params.temperature)
        .with_param("n_tokens", params.n_tokens as u64)
        .with_param("tokens_generated", output.len() as u64)
        .with_param("stop_at_eos", params.stop_at_eos)
        .with_param("clipping", bounds.is_some())
        // Unverifiable hypothesis of the guarantee: the scorer was not
        // trained on the private document distribution.
        .with_param("assumes_scorer_untrained_on_private_data", true);
    if let Some(b) = bounds {
        report = report.with_param("clip_width", b.width());
    }
    if let Some(k) = params.top_k {
        report = report.with_param("top_k", k as u64);
    }

    Ok(SanitizedDocument {
        source_doc_id: doc.doc_id.clone(),
        text: detokenize(vocab, &output),
        token_ids: output,
        report,
    })
}

/// Learns per-coordinate clipping bounds by scoring every decoding context
/// that arises while traversing each public document's prompt and text, and
/// recording the running coordinate-wise minimum and maximum logits.
///
/// The public documents must be disjoint from the private corpus; that is
/// the caller's responsibility and should be enforced by doc id upstream.
pub fn learn_clip_bounds(
    scorer: &dyn TokenScorer,
    public_docs: &[Document],
    template: &str,
) -> Result<ClipBounds> {
    if public_docs.is_empty() {
        return Err(Error::InvalidInput(
            "cannot learn clip bounds from an empty public corpus".into(),
        ));
    }
    let vocab = scorer.vocabulary();
    let mut lower = vec![f64::INFINITY; vocab.size()];
    let mut upper = vec![f64::NEG_INFINITY; vocab.size()];
    let mut observed = 0usize;
    for doc in public_docs {
        let prompt = generate_prompt(doc, template)?;
        let mut context = tokenize(vocab, scorer.unk_id(), &prompt);
        let continuation = tokenize(vocab, scorer.unk_id(), &doc.text);
        for &next in &continuation {
            let u = scorer.next_logits(&context)?;
            if u.len() != vocab.size() {
                return Err(Error::LengthMismatch {
                    expected: vocab.size(),
                    got: u.len(),
                });
            }
            for (j, &s) in u.scores().iter().enumerate() {
                lower[j] = lower[j].min(s);
                upper[j] = upper[j].max(s);
            }
            observed += 1;
            context.push(next);
        }
    }
    if observed == 0 {
        return Err(Error::InvalidInput(
            "public corpus produced no decoding contexts".into(),
        ));
    }
    ClipBounds::new(lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;
    use crate::scorer::{EOS_TOKEN, UNK_TOKEN};
    use crate::vocab::Vocabulary;

    /// Scorer that replays a fixed logit script, one entry per step.
    struct ScriptScorer {
        vocab: Vocabulary,
        script: Vec<Vec<f64>>,
    }

    impl ScriptScorer {
        fn new(script: Vec<Vec<f64>>) -> Self {
            let n = script[0].len();
            let tokens = (0..n).map(|i| format!("t{i}")).collect();
            Self {
                vocab: Vocabulary::from_tokens(tokens).unwrap(),
                script,
            }
        }
    }

    impl TokenScorer for ScriptScorer {
        fn vocabulary(&self) -> &Vocabulary {
            &self.vocab
        }

        fn next_logits(&self, context: &[TokenId]) -> Result<LogitVector> {
            // Steps are indexed by how much the context has grown; the
            // script position is keyed off generated length via context len.
            let step = context.len().min(self.script.len() - 1);
            LogitVector::new(self.script[step].clone())
        }

        fn eos_id(&self) -> Option<TokenId> {
            None
        }

        fn unk_id(&self) -> Option<TokenId> {
            None
        }

        fn concurrent_safe(&self) -> bool {
            true
        }
    }

    fn doc(text: &str) -> Document {
        Document::new("d", text, 0, 0).unwrap()
    }

    #[test]
    fn clip_then_scale() {
        let u = LogitVector::new(vec![3.0, -1.0, 0.0]).unwrap();
        let b = ClipBounds::uniform(3, 0.0, 2.0).unwrap();
        let out = clip_and_scale(&u, Some(&b), 2.0).unwrap();
        assert_eq!(out.scores(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn absent_bounds_is_identity_at_unit_temperature() {
        let u = LogitVector::new(vec![0.5, -3.25, 7.0]).unwrap();
        let out = clip_and_scale(&u, None, 1.0).unwrap();
        assert_eq!(out.scores(), u.scores());
    }

    #[test]
    fn uniform_clamp() {
        let u = LogitVector::new(vec![5.0, 5.0, 5.0]).unwrap();
        let b = ClipBounds::uniform(3, 0.0, 4.0).unwrap();
        let out = clip_and_scale(&u, Some(&b), 4.0).unwrap();
        assert_eq!(out.scores(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let u = LogitVector::new(vec![1.0, 2.0]).unwrap();
        let b = ClipBounds::uniform(3, 0.0, 1.0).unwrap();
        assert!(matches!(
            clip_and_scale(&u, Some(&b), 1.0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn softmax_of_equal_scores_is_uniform() {
        let p = to_probabilities(&LogitVector::new(vec![0.0; 3]).unwrap()).unwrap();
        for &pi in p.probs() {
            assert!((pi - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_hand_example() {
        let p =
            to_probabilities(&LogitVector::new(vec![4.0_f64.ln(), 0.0, 0.0]).unwrap()).unwrap();
        assert!((p.probs()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.probs()[1] - 1.0 / 6.0).abs() < 1e-12);
        assert!((p.probs()[2] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_handles_large_magnitudes() {
        let p = to_probabilities(&LogitVector::new(vec![1000.0; 3]).unwrap()).unwrap();
        for &pi in p.probs() {
            assert!((pi - 1.0 / 3.0).abs() < 1e-12);
            assert!(pi.is_finite());
        }
    }

    #[test]
    fn degenerate_distribution_always_sampled() {
        let p = ProbabilityVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = make_rng(3, 0);
        for _ in 0..100 {
            assert_eq!(sample_token(&p, &mut rng), 0);
        }
    }

    #[test]
    fn sampler_matches_uniform_distribution() {
        // Binomial 3-sigma bound at p = 1/3 over 1e6 draws.
        let p = ProbabilityVector::new(vec![1.0 / 3.0; 3]).unwrap();
        let mut rng = make_rng(17, 0);
        let n = 1_000_000;
        let mut counts = [0u64; 3];
        for _ in 0..n {
            counts[sample_token(&p, &mut rng) as usize] += 1;
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((0.332..=0.335).contains(&f), "frequency {f}");
        }
    }

    #[test]
    fn sampler_matches_skewed_distribution() {
        let probs = [0.5, 0.25, 0.25];
        let p = ProbabilityVector::new(probs.to_vec()).unwrap();
        let mut rng = make_rng(18, 0);
        let n = 1_000_000;
        let mut counts = [0u64; 3];
        for _ in 0..n {
            counts[sample_token(&p, &mut rng) as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let f = c as f64 / n as f64;
            assert!((f - probs[i]).abs() < 0.002, "frequency {f} vs {}", probs[i]);
        }
    }

    #[test]
    fn top_k_keeps_largest_and_renormalizes() {
        let p = ProbabilityVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let out = top_k_filter(&p, 2).unwrap();
        assert!((out.probs()[0] - 0.625).abs() < 1e-12);
        assert!((out.probs()[1] - 0.375).abs() < 1e-12);
        assert_eq!(out.probs()[2], 0.0);
    }

    #[test]
    fn top_k_full_vocabulary_is_identity() {
        let p = ProbabilityVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let out = top_k_filter(&p, 3).unwrap();
        for (a, b) in out.probs().iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn top_k_tie_breaks_toward_lowest_id() {
        let p = ProbabilityVector::new(vec![0.4, 0.4, 0.2]).unwrap();
        let out = top_k_filter(&p, 1).unwrap();
        assert_eq!(out.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn top_k_out_of_range_rejected() {
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert!(top_k_filter(&p, 0).is_err());
        assert!(top_k_filter(&p, 3).is_err());
    }

    #[test]
    fn zero_width_bounds_destroy_all_signal() {
        // The scorer screams +B/-B, but clipping to [c, c] flattens it, so
        // the output must be uniform and epsilon must be zero.
        let script = vec![vec![50.0, -50.0, 50.0, -50.0]; 64];
        let scorer = ScriptScorer::new(script);
        let b = ClipBounds::uniform(4, 1.0, 1.0).unwrap();
        let params = DecodeParams::new("{doc}", 1.0, 2000);
        let mut rng = make_rng(23, 0);
        let out = dp_prompt(&scorer, &doc("t0 t1"), &params, Some(&b), &mut rng).unwrap();
        assert_eq!(out.report.epsilon, Epsilon::Bounded(0.0));
        let mut counts = [0u64; 4];
        for &id in &out.token_ids {
            counts[id as usize] += 1;
        }
        // Loose uniformity check: each token near 1/4 of 2000 draws.
        for &c in &counts {
            assert!((c as f64 / 2000.0 - 0.25).abs() < 0.05, "counts {counts:?}");
        }
    }

    #[test]
    fn near_zero_temperature_is_greedy() {
        let script = vec![
            vec![0.1, 0.9, 0.3],
            vec![0.8, 0.2, 0.5],
            vec![0.2, 0.3, 0.7],
        ];
        let scorer = ScriptScorer::new(script.clone());
        let params = DecodeParams::new("{doc}", 1e-6, 2);
        let mut rng = make_rng(29, 0);
        // Prompt "t0" tokenizes to [0], so steps see script[1], script[2].
        let out = dp_prompt(&scorer, &doc("t0"), &params, None, &mut rng).unwrap();
        assert_eq!(out.token_ids, vec![0, 2]);
    }

    #[test]
    fn sampled_trace_matches_hand_simulation() {
        let script = vec![
            vec![0.0, 1.0, -1.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ];
        let scorer = ScriptScorer::new(script.clone());
        let params = DecodeParams::new("{doc}", 1.5, 2);
        let mut rng = make_rng(31, 7);
        let out = dp_prompt(&scorer, &doc("t1"), &params, None, &mut rng).unwrap();

        // Replay: identical stream, hand-computed softmax + inverse CDF.
        let mut replay = make_rng(31, 7);
        let mut ctx_len = 1; // prompt "t1" is one token
        let mut expect = Vec::new();
        for _ in 0..2 {
            let logits = &script[ctx_len];
            let scaled: Vec<f64> = logits.iter().map(|x| x / 1.5).collect();
            let m = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scaled.iter().map(|s| (s - m).exp()).sum();
            let probs: Vec<f64> = scaled.iter().map(|s| (s - m).exp() / z).collect();
            let u = replay.next_f64();
            let mut cum = 0.0;
            let mut chosen = probs.len() - 1;
            for (i, &pi) in probs.iter().enumerate() {
                cum += pi;
                if u < cum {
                    chosen = i;
                    break;
                }
            }
            expect.push(chosen as TokenId);
            ctx_len += 1;
        }
        assert_eq!(out.token_ids, expect);
    }

    #[test]
    fn identical_inputs_give_byte_identical_output() {
        let script = vec![vec![0.3, 0.1, 0.6, -0.2]; 32];
        let scorer = ScriptScorer::new(script);
        let params = DecodeParams::new("{doc}", 1.0, 20);
        let a = dp_prompt(&scorer, &doc("t0 t1"), &params, None, &mut make_rng(5, 9)).unwrap();
        let b = dp_prompt(&scorer, &doc("t0 t1"), &params, None, &mut make_rng(5, 9)).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }

    #[test]
    fn top_k_run_reports_unbounded_epsilon() {
        let scorer = ScriptScorer::new(vec![vec![0.0, 0.5, 1.0]; 16]);
        let b = ClipBounds::uniform(3, 0.0, 1.0).unwrap();
        let mut params = DecodeParams::new("{doc}", 1.0, 4);
        params.top_k = Some(2);
        let out = dp_prompt(&scorer, &doc("t0"), &params, Some(&b), &mut make_rng(1, 1)).unwrap();
        assert!(out.report.epsilon.is_unbounded());

        params.top_k = None;
        let out = dp_prompt(&scorer, &doc("t0"), &params, Some(&b), &mut make_rng(1, 1)).unwrap();
        assert_eq!(out.report.epsilon, Epsilon::Bounded(8.0));

        let out = dp_prompt(&scorer, &doc("t0"), &params, None, &mut make_rng(1, 1)).unwrap();
        assert!(out.report.epsilon.is_unbounded());
    }

    #[test]
    fn scorer_failure_carries_step_index() {
        struct FailingScorer {
            vocab: Vocabulary,
        }
        impl TokenScorer for FailingScorer {
            fn vocabulary(&self) -> &Vocabulary {
                &self.vocab
            }
            fn next_logits(&self, context: &[TokenId]) -> Result<LogitVector> {
                if context.len() >= 3 {
                    Err(Error::InvalidInput("backend fell over".into()))
                } else {
                    LogitVector::new(vec![0.0, 0.0])
                }
            }
            fn concurrent_safe(&self) -> bool {
                true
            }
        }
        let scorer = FailingScorer {
            vocab: Vocabulary::from_tokens(vec!["t0".into(), "t1".into()]).unwrap(),
        };
        let params = DecodeParams::new("{doc}", 1.0, 10);
        let err = dp_prompt(
            &scorer,
            &doc("t0"),
            &params,
            None,
            &mut make_rng(0, 0),
        )
        .unwrap_err();
        match err {
            Error::ScorerAt { step, .. } => assert_eq!(step, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn learn_bounds_single_context() {
        // One public doc whose text is a single token: exactly one context.
        let scorer = ScriptScorer::new(vec![vec![1.0, 2.0, 3.0]; 4]);
        let docs = [doc("t1")];
        let b = learn_clip_bounds(&scorer, &docs, "{doc}").unwrap();
        assert_eq!(b.lower(), &[1.0, 2.0, 3.0]);
        assert_eq!(b.upper(), &[1.0, 2.0, 3.0]);
        assert_eq!(b.width(), 0.0);
    }

    #[test]
    fn learn_bounds_elementwise_min_max() {
        // A two-token doc under the identity template: the prompt already
        // holds both tokens, so traversal scores contexts of lengths 2 and
        // 3, which the script maps to [1,2,3] and [3,2,1].
        let scorer = ScriptScorer::new(vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![1.0, 2.0, 3.0],
            vec![3.0, 2.0, 1.0],
        ]);
        let b = learn_clip_bounds(&scorer, &[doc("t0 t1")], "{doc}").unwrap();
        assert_eq!(b.lower(), &[1.0, 2.0, 1.0]);
        assert_eq!(b.upper(), &[3.0, 2.0, 3.0]);
        assert_eq!(b.width(), 2.0);
    }

    #[test]
    fn learn_bounds_requires_placeholder() {
        let scorer = ScriptScorer::new(vec![vec![0.0, 0.0, 0.0]]);
        assert!(learn_clip_bounds(&scorer, &[doc("t0")], "no placeholder").is_err());
    }

    #[test]
    fn learn_bounds_empty_corpus_rejected() {
        let scorer = ScriptScorer::new(vec![vec![0.0, 0.0]]);
        assert!(learn_clip_bounds(&scorer, &[], "{doc}").is_err());
    }

    #[test]
    fn eos_stop_truncates_but_budget_is_charged() {
        // Vocabulary with an explicit </s>; the script makes </s> certain
        // from the second step on.
        let tokens: Vec<String> = vec![UNK_TOKEN.into(), EOS_TOKEN.into(), "w".into()];
        struct EosScorer {
            vocab: Vocabulary,
        }
        impl TokenScorer for EosScorer {
            fn vocabulary(&self) -> &Vocabulary {
                &self.vocab
            }
            fn next_logits(&self, context: &[TokenId]) -> Result<LogitVector> {
                if context.len() <= 1 {
                    LogitVector::new(vec![-100.0, -100.0, 100.0])
                } else {
                    LogitVector::new(vec![-100.0, 100.0, -100.0])
                }
            }
            fn concurrent_safe(&self) -> bool {
                true
            }
        }
        let scorer = EosScorer {
            vocab: Vocabulary::from_tokens(tokens).unwrap(),
        };
        let b = ClipBounds::uniform(3, -1.0, 1.0).unwrap();
        let mut params = DecodeParams::new("{doc}", 1.0, 10);
        params.stop_at_eos = true;
        let out = dp_prompt(&scorer, &doc("w"), &params, Some(&b), &mut make_rng(2, 2)).unwrap();
        assert_eq!(out.token_ids, vec![2]);
        assert_eq!(out.text, "w");
        // Budget charged for all 10 tokens: 2 * 10 * 2 / 1 = 40.
        assert_eq!(out.report.epsilon, Epsilon::Bounded(40.0));
    }
}
