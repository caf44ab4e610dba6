//! Empirical privacy measurement: attack scenarios, splits, and evaluation.
//!
//! A mechanism's theoretical epsilon says little about what an adversary
//! actually achieves, so privacy is also measured by running author
//! de-anonymization attacks on sanitized output and reporting the attacker's
//! macro-F1, next to the sentiment macro-F1 that measures remaining utility.
//!
//! Four attacker configurations are distinguished along two axes:
//!
//! - **static**: the attacker trains and validates on clean data and is
//!   tested on sanitized documents;
//! - **adaptive**: the attacker trains, validates, and tests on sanitized
//!   data, adapting to the mechanism;
//!
//! crossed with **text** access (tf-idf features over the released text) or
//! **embedding** access (released embedding vectors as features).
//!
//! The attackers here are linear classifiers rather than the large neural
//! models a determined adversary might field; every
//! [`PrivacyUtilityPoint`] is stamped with the attacker family so results
//! are never mistaken for stronger-attack numbers.

mod classifier;
mod features;
mod metrics;

pub use classifier::{train_classifier, ClassifierModel, LogisticHyper};
pub use features::{FeatureMatrix, SparseVec, TfIdfVectorizer};
pub use metrics::{expected_random_f1, macro_f1};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::Epsilon;
use crate::rng::{make_rng, stable_hash64, RngStream};

/// Whether the attacker sees sanitized data at training time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adaptivity {
    Static,
    Adaptive,
}

/// What representation of the released data the attacker consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Embedding,
    Text,
}

/// One of the four attacker configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackScenario {
    pub adaptivity: Adaptivity,
    pub access: Access,
}

impl AttackScenario {
    pub const STATIC_TEXT: Self = Self {
        adaptivity: Adaptivity::Static,
        access: Access::Text,
    };
    pub const ADAPTIVE_TEXT: Self = Self {
        adaptivity: Adaptivity::Adaptive,
        access: Access::Text,
    };
    pub const STATIC_EMBEDDING: Self = Self {
        adaptivity: Adaptivity::Static,
        access: Access::Embedding,
    };
    pub const ADAPTIVE_EMBEDDING: Self = Self {
        adaptivity: Adaptivity::Adaptive,
        access: Access::Embedding,
    };
}

impl fmt::Display for AttackScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.adaptivity {
            Adaptivity::Static => "static",
            Adaptivity::Adaptive => "adaptive",
        };
        let b = match self.access {
            Access::Embedding => "embedding",
            Access::Text => "text",
        };
        write!(f, "{a}-{b}")
    }
}

impl FromStr for AttackScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('-').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "scenario {s:?} must look like adaptive-text or static-embedding"
            ))
        })?;
        let adaptivity = match a {
            "static" => Adaptivity::Static,
            "adaptive" => Adaptivity::Adaptive,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown adaptivity {a:?}"
                )))
            }
        };
        let access = match b {
            "embedding" => Access::Embedding,
            "text" => Access::Text,
            _ => return Err(Error::InvalidParameter(format!("unknown access {b:?}"))),
        };
        Ok(Self { adaptivity, access })
    }
}

impl Serialize for AttackScenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AttackScenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Released representation of a document for attack purposes.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Text(String),
    Vector(Vec<f64>),
}

/// One attackable record: identifiers, labels, and the released body.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub doc_id: String,
    pub author: u32,
    pub utility: u32,
    pub body: Body,
}

/// Train/validation/test record sets built for one scenario.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<Record>,
    pub val: Vec<Record>,
    pub test: Vec<Record>,
}

/// Builds scenario splits aligned by doc id and stratified by author.
///
/// Ids are partitioned once per author group (deterministically under
/// `seed`) into train/val/test shares; the static scenario then takes train
/// and validation records from the clean set and the test records from the
/// sanitized counterparts of the held-out ids, while the adaptive scenario
/// reads all three sets from the sanitized side. By construction a static
/// attacker never trains on sanitized data.
pub fn build_scenario_splits(
    clean: &[Record],
    sanitized: &[Record],
    scenario: AttackScenario,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Splits> {
    let (r_train, r_val, r_test) = ratios;
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(Error::InvalidParameter(
            "split ratios must be nonnegative".into(),
        ));
    }
    if ((r_train + r_val + r_test) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "split ratios must sum to 1, got {}",
            r_train + r_val + r_test
        )));
    }
    let by_id: HashMap<&str, &Record> = sanitized
        .iter()
        .map(|r| (r.doc_id.as_str(), r))
        .collect();
    for r in clean {
        if !by_id.contains_key(r.doc_id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "doc {} has no sanitized counterpart",
                r.doc_id
            )));
        }
    }

    // Group clean indices by author, preserving input order within groups.
    let mut groups: Vec<(u32, Vec<usize>)> = Vec::new();
    for (i, r) in clean.iter().enumerate() {
        match groups.iter_mut().find(|(a, _)| *a == r.author) {
            Some((_, v)) => v.push(i),
            None => groups.push((r.author, vec![i])),
        }
    }
    groups.sort_by_key(|(a, _)| *a);

    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (author, mut idx) in groups {
        let mut rng = make_rng(seed, stable_hash64(&["split", &author.to_string()]));
        for i in (1..idx.len()).rev() {
            use rand::Rng;
            idx.swap(i, rng.random_range(0..=i));
        }
        let n = idx.len() as f64;
        let c1 = (n * r_train).round() as usize;
        let c2 = ((n * (r_train + r_val)).round() as usize).max(c1);
        let c2 = c2.min(idx.len());
        let c1 = c1.min(c2);
        train_idx.extend_from_slice(&idx[..c1]);
        val_idx.extend_from_slice(&idx[c1..c2]);
        test_idx.extend_from_slice(&idx[c2..]);
    }

    let pick = |indices: &[usize], from_sanitized: bool| -> Vec<Record> {
        indices
            .iter()
            .map(|&i| {
                if from_sanitized {
                    (*by_id[clean[i].doc_id.as_str()]).clone()
                } else {
                    clean[i].clone()
                }
            })
            .collect()
    };
    let adaptive = scenario.adaptivity == Adaptivity::Adaptive;
    Ok(Splits {
        train: pick(&train_idx, adaptive),
        val: pick(&val_idx, adaptive),
        // The test set is sanitized in both scenarios; that is the data the
        // adversary actually observes.
        test: pick(&test_idx, true),
    })
}

/// Mean and standard deviation over repeats (sample standard deviation,
/// zero for a single repeat).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatStat {
    pub mean: f64,
    pub std: f64,
}

impl RepeatStat {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

/// One measured point on the privacy-utility curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyUtilityPoint {
    pub mechanism: String,
    /// The mechanism's swept parameter (epsilon or temperature).
    pub parameter: f64,
    pub scenario: AttackScenario,
    pub author_f1: RepeatStat,
    pub utility_f1: RepeatStat,
    pub epsilon_theoretical: Epsilon,
    pub repeats: usize,
    /// Attacker family used for the measurement. Always a linear model in
    /// this toolkit; recorded so numbers are never read as neural-attacker
    /// results.
    pub attacker: String,
}

/// Inputs for one privacy-utility measurement.
pub struct EvalTask<'a> {
    pub clean: &'a [Record],
    /// One sanitized counterpart set per repeat, each aligned with `clean`
    /// by doc id.
    pub sanitized_repeats: &'a [Vec<Record>],
    pub scenario: AttackScenario,
    pub n_authors: usize,
    pub n_utilities: usize,
    pub mechanism: String,
    pub parameter: f64,
    pub epsilon: Epsilon,
}

/// Evaluation knobs shared across a sweep.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub ratios: (f64, f64, f64),
    pub hyper: LogisticHyper,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            ratios: (0.8, 0.1, 0.1),
            hyper: LogisticHyper::default(),
            seed: 0,
        }
    }
}

fn features_for(
    records: &[Record],
    access: Access,
    tfidf: &TfIdfVectorizer,
) -> Result<FeatureMatrix> {
    match access {
        Access::Text => {
            let texts: Vec<&str> = records
                .iter()
                .map(|r| match &r.body {
                    Body::Text(t) => Ok(t.as_str()),
                    Body::Vector(_) => Err(Error::InvalidInput(format!(
                        "text-access scenario got an embedding body ({})",
                        r.doc_id
                    ))),
                })
                .collect::<Result<_>>()?;
            tfidf.transform(&texts)
        }
        Access::Embedding => {
            let vectors: Vec<Vec<f64>> = records
                .iter()
                .map(|r| match &r.body {
                    Body::Vector(v) => Ok(v.clone()),
                    Body::Text(_) => Err(Error::InvalidInput(format!(
                        "embedding-access scenario got a text body ({})",
                        r.doc_id
                    ))),
                })
                .collect::<Result<_>>()?;
            FeatureMatrix::from_dense(&vectors)
        }
    }
}

/// Runs the attacker and the utility classifier over every repeat and
/// aggregates their test macro-F1.
pub fn evaluate_point(task: &EvalTask, settings: &EvalSettings) -> Result<PrivacyUtilityPoint> {
    if task.sanitized_repeats.is_empty() {
        return Err(Error::InvalidInput("need at least one repeat".into()));
    }
    let mut author_scores = Vec::with_capacity(task.sanitized_repeats.len());
    let mut utility_scores = Vec::with_capacity(task.sanitized_repeats.len());

    for (rep, sanitized) in task.sanitized_repeats.iter().enumerate() {
        let rep_tag = rep.to_string();
        let scen_tag = task.scenario.to_string();
        let split_seed = stable_hash64(&["split", &task.mechanism, &scen_tag, &rep_tag]);
        let splits = build_scenario_splits(
            task.clean,
            sanitized,
            task.scenario,
            settings.ratios,
            settings.seed ^ split_seed,
        )?;

        let mut tfidf = TfIdfVectorizer::new();
        if task.scenario.access == Access::Text {
            let train_texts: Vec<&str> = splits
                .train
                .iter()
                .map(|r| match &r.body {
                    Body::Text(t) => Ok(t.as_str()),
                    Body::Vector(_) => Err(Error::InvalidInput(
                        "text-access scenario got an embedding body".into(),
                    )),
                })
                .collect::<Result<_>>()?;
            tfidf.fit(&train_texts)?;
        }
        let train_x = features_for(&splits.train, task.scenario.access, &tfidf)?;
        let val_x = features_for(&splits.val, task.scenario.access, &tfidf)?;
        let test_x = features_for(&splits.test, task.scenario.access, &tfidf)?;

        let labels = |records: &[Record], which: fn(&Record) -> u32| {
            records.iter().map(which).collect::<Vec<u32>>()
        };

        for (role, n_classes, get) in [
            (
                "author",
                task.n_authors,
                (|r: &Record| r.author) as fn(&Record) -> u32,
            ),
            ("utility", task.n_utilities, |r: &Record| r.utility),
        ] {
            let mut rng: RngStream = make_rng(
                settings.seed,
                stable_hash64(&["train", &task.mechanism, &scen_tag, &rep_tag, role]),
            );
            let model = train_classifier(
                &train_x,
                &labels(&splits.train, get),
                &val_x,
                &labels(&splits.val, get),
                n_classes,
                &settings.hyper,
                &mut rng,
            )?;
            let f1 = macro_f1(
                &model.predict(&test_x),
                &labels(&splits.test, get),
                n_classes,
            )?;
            if role == "author" {
                author_scores.push(f1);
            } else {
                utility_scores.push(f1);
            }
        }
    }

    let point = PrivacyUtilityPoint {
        mechanism: task.mechanism.clone(),
        parameter: task.parameter,
        scenario: task.scenario,
        author_f1: RepeatStat::from_samples(&author_scores),
        utility_f1: RepeatStat::from_samples(&utility_scores),
        epsilon_theoretical: task.epsilon,
        repeats: task.sanitized_repeats.len(),
        attacker: match task.scenario.access {
            Access::Text => "linear-tfidf".to_string(),
            Access::Embedding => "linear-embedding".to_string(),
        },
    };
    debug_assert!(point.author_f1.mean >= 0.0 && point.author_f1.mean <= 1.0);
    debug_assert!(point.utility_f1.mean >= 0.0 && point.utility_f1.mean <= 1.0);
    Ok(point)
}
