//! Token vocabulary with a dense id space.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense token id. Ids always cover `0..vocab.size()` without gaps.
pub type TokenId = u32;

/// An ordered set of unique token strings.
///
/// The position of a token in the list is its id, so the id→string and
/// string→id maps are mutually inverse by construction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from an ordered token list. Duplicates are rejected.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), id as TokenId).is_some() {
                return Err(Error::InvalidInput(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Content hash of the vocabulary, used to detect mismatched reuse of
    /// artifacts (clip-bound files, remote endpoints) across vocabularies.
    ///
    /// Tokens are length-prefixed before hashing so that the digest is
    /// unambiguous under concatenation.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for tok in &self.tokens {
            hasher.update((tok.len() as u64).to_le_bytes());
            hasher.update(tok.as_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_dense_and_maps_inverse() {
        let v = Vocabulary::from_tokens(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(v.size(), 3);
        for id in 0..v.size() as TokenId {
            let tok = v.token(id).unwrap();
            assert_eq!(v.id_of(tok), Some(id));
        }
        assert_eq!(v.id_of("missing"), None);
        assert_eq!(v.token(3), None);
    }

    #[test]
    fn duplicate_tokens_rejected() {
        let err = Vocabulary::from_tokens(vec!["a".into(), "a".into()]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn hash_depends_on_order_and_content() {
        let v1 = Vocabulary::from_tokens(vec!["a".into(), "b".into()]).unwrap();
        let v2 = Vocabulary::from_tokens(vec!["b".into(), "a".into()]).unwrap();
        let v3 = Vocabulary::from_tokens(vec!["a".into(), "b".into()]).unwrap();
        assert_ne!(v1.content_hash(), v2.content_hash());
        assert_eq!(v1.content_hash(), v3.content_hash());
    }

    #[test]
    fn hash_unambiguous_under_concatenation() {
        let v1 = Vocabulary::from_tokens(vec!["ab".into(), "c".into()]).unwrap();
        let v2 = Vocabulary::from_tokens(vec!["a".into(), "bc".into()]).unwrap();
        assert_ne!(v1.content_hash(), v2.content_hash());
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let v = Vocabulary::from_tokens(vec!["x".into(), "y".into()]).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id_of("y"), Some(1));
    }
}
