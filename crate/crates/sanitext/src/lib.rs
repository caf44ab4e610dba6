//! Local differential privacy for text.
//!
//! `sanitext` sanitizes private documents before they leave the writer's
//! hands. The flagship mechanism paraphrases a document by sampling every
//! token of the paraphrase from clipped, temperature-scaled scorer logits,
//! giving a document-level pure local-DP guarantee whose strength is set by
//! the sampling temperature. Word-level metric-DP mechanisms (embedding
//! perturbation and exponential-mechanism word selection) and a
//! sentence-level truncated-Laplace mechanism round out the baselines, and
//! an attack harness measures what the guarantees mean in practice by
//! training de-anonymization classifiers against the sanitized output.
//!
//! The crate is organized around the experiment loop:
//!
//! - [`corpus`]: labeled documents and corpus files
//! - [`rng`]: seeded, stream-addressed randomness for reproducible runs
//! - [`accountant`]: the epsilon budget of the sampling decoder
//! - [`scorer`]: next-token logit sources (n-gram model, remote endpoint)
//! - [`decode`]: the differentially private sampling decoder
//! - [`word`]: word-level metric-DP mechanisms over embeddings
//! - [`sentence`]: sentence-embedding truncated-Laplace mechanism
//! - [`attack`]: de-anonymization scenarios, classifiers, and F1 metrics
//! - [`pipeline`]: corpus synthesis, experiment sweeps, and reports
//!
//! The `sanitext` binary in this workspace drives the same functions from
//! the command line, and the book under `book/` walks through the concepts
//! chapter by chapter.

pub mod accountant;
pub mod attack;
pub mod corpus;
pub mod decode;
pub mod error;
pub mod logits;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scorer;
pub mod sentence;
pub mod vocab;
pub mod word;

pub use accountant::epsilon_for;
pub use corpus::{Corpus, Document, LabelMap};
pub use decode::{dp_prompt, DecodeParams, SanitizedDocument};
pub use error::{Error, Result};
pub use logits::{ClipBounds, LogitVector};
pub use report::{Epsilon, Granularity, PrivacyReport};
pub use rng::{make_rng, RngStream};
pub use scorer::TokenScorer;
pub use vocab::{TokenId, Vocabulary};
