//! Privacy reports attached to every sanitized output.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Theoretical privacy level of a mechanism run.
///
/// `Unbounded` means no finite guarantee is claimed, which happens whenever
/// logit clipping is disabled or top-k filtering restricted the sample space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Epsilon {
    Bounded(f64),
    #[serde(with = "unbounded_tag")]
    Unbounded,
}

impl Epsilon {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Epsilon::Unbounded)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Epsilon::Bounded(e) => Some(*e),
            Epsilon::Unbounded => None,
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Bounded(e) => write!(f, "{e}"),
            Epsilon::Unbounded => write!(f, "UNBOUNDED"),
        }
    }
}

mod unbounded_tag {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("UNBOUNDED")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "UNBOUNDED" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected UNBOUNDED, got {tag:?}")))
        }
    }
}

/// Unit of text a mechanism privatizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Word,
    Sentence,
    Document,
}

/// Mechanism parameters recorded alongside a run. A sorted map keeps
/// serialized reports byte-stable.
pub type Params = BTreeMap<String, serde_json::Value>;

/// Provenance record for one sanitized output: which mechanism produced it,
/// at what granularity, under what theoretical guarantee, and with which
/// parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub mechanism: String,
    pub granularity: Granularity,
    pub epsilon: Epsilon,
    pub parameters: Params,
}

impl PrivacyReport {
    pub fn new(mechanism: &str, granularity: Granularity, epsilon: Epsilon) -> Self {
        Self {
            mechanism: mechanism.to_string(),
            granularity,
            epsilon,
            parameters: Params::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }
}
