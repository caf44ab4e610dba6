//! Add-k smoothed n-gram language model.
//!
//! The model emits exact log-probabilities, so it is a valid scorer in the
//! strictest sense: converting its logits to probabilities at temperature 1
//! recovers the model distribution bit for bit. Contexts back off to the
//! longest stored suffix (stupid-backoff style without weights); a context
//! with no stored suffix scores every token equally, i.e. the uniform
//! distribution that add-k smoothing induces on zero counts.
//!
//! The vocabulary is the set of corpus words meeting `min_count`, plus the
//! reserved `<unk>` and `</s>` tokens. The begin-of-sequence marker is a
//! context-only sentinel outside the scored vocabulary, so probabilities
//! always normalize over exactly the tokens a decoder may emit.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::logits::LogitVector;
use crate::scorer::{word_tokens, TokenScorer, EOS_TOKEN, UNK_TOKEN};
use crate::vocab::{TokenId, Vocabulary};

/// Training settings. The defaults (trigram, add-k 0.01, min-count 2) train
/// in seconds yet stay sharp enough that sampling temperature visibly
/// modulates the output distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NGramParams {
    pub order: usize,
    pub add_k: f64,
    pub min_count: u64,
}

impl Default for NGramParams {
    fn default() -> Self {
        Self {
            order: 3,
            add_k: 0.01,
            min_count: 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    counts: HashMap<TokenId, u64>,
}

/// Count-based language model over word tokens.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    add_k: f64,
    vocab: Vocabulary,
    contexts: HashMap<Box<[TokenId]>, ContextCounts>,
}

impl NGramModel {
    /// Counts order-length windows (with begin-of-sequence padding and a
    /// final `</s>` target) over every document.
    pub fn train(corpus: &[Document], params: &NGramParams) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("training corpus is empty".into()));
        }
        if params.order < 1 {
            return Err(Error::InvalidParameter("order must be at least 1".into()));
        }
        if !(params.add_k > 0.0) {
            return Err(Error::InvalidParameter("add_k must be positive".into()));
        }
        if params.min_count < 1 {
            return Err(Error::InvalidParameter(
                "min_count must be at least 1".into(),
            ));
        }

        let mut freq: HashMap<String, u64> = HashMap::new();
        for doc in corpus {
            for tok in word_tokens(&doc.text) {
                *freq.entry(tok).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<String> = freq
            .iter()
            .filter(|(_, &c)| c >= params.min_count)
            .map(|(t, _)| t.clone())
            .collect();
        kept.sort();
        let mut tokens = vec![UNK_TOKEN.to_string(), EOS_TOKEN.to_string()];
        tokens.extend(kept);
        let vocab = Vocabulary::from_tokens(tokens)?;
        let unk = vocab.id_of(UNK_TOKEN).expect("reserved");
        let eos = vocab.id_of(EOS_TOKEN).expect("reserved");
        let bos = vocab.size() as TokenId; // context-only sentinel

        let mut model = Self {
            order: params.order,
            add_k: params.add_k,
            vocab,
            contexts: HashMap::new(),
        };

        for doc in corpus {
            let mut seq: Vec<TokenId> = vec![bos; params.order - 1];
            seq.extend(
                word_tokens(&doc.text)
                    .iter()
                    .map(|t| model.vocab.id_of(t).unwrap_or(unk)),
            );
            seq.push(eos);
            for i in (params.order - 1)..seq.len() {
                let target = seq[i];
                for len in model.stored_lengths() {
                    let ctx = &seq[i - len..i];
                    let entry = model
                        .contexts
                        .entry(ctx.to_vec().into_boxed_slice())
                        .or_default();
                    entry.total += 1;
                    *entry.counts.entry(target).or_insert(0) += 1;
                }
            }
        }
        Ok(model)
    }

    /// Context lengths kept in the count tables: `1..order` for higher-order
    /// models, just the empty context for a unigram model.
    fn stored_lengths(&self) -> std::ops::Range<usize> {
        if self.order == 1 {
            0..1
        } else {
            1..self.order
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    /// Sentinel id used to pad contexts before the first real token. Not a
    /// member of the scored vocabulary.
    pub fn bos_id(&self) -> TokenId {
        self.vocab.size() as TokenId
    }

    /// Maps text to this model's token ids, with unknown words becoming
    /// `<unk>`.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        crate::scorer::tokenize(&self.vocab, self.vocab.id_of(UNK_TOKEN), text)
    }

    fn lookup_suffix(&self, context: &[TokenId]) -> Option<&ContextCounts> {
        let max_len = (self.order - 1).min(context.len());
        let min_len = if self.order == 1 { 0 } else { 1 };
        let mut len = max_len;
        loop {
            if len < min_len {
                return None;
            }
            let key = &context[context.len() - len..];
            if let Some(cc) = self.contexts.get(key) {
                return Some(cc);
            }
            if len == 0 {
                return None;
            }
            len -= 1;
        }
    }

    /// Writes the model as a versioned, sorted JSON dump; loading it back
    /// reproduces the model bit-exactly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut contexts: Vec<(Vec<TokenId>, Vec<(TokenId, u64)>)> = self
            .contexts
            .iter()
            .map(|(k, v)| {
                let mut counts: Vec<(TokenId, u64)> =
                    v.counts.iter().map(|(&t, &c)| (t, c)).collect();
                counts.sort_unstable();
                (k.to_vec(), counts)
            })
            .collect();
        contexts.sort();
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            order: self.order,
            add_k: self.add_k,
            vocab: self.vocab.tokens().to_vec(),
            contexts,
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let vocab = Vocabulary::from_tokens(file.vocab)?;
        let mut contexts = HashMap::with_capacity(file.contexts.len());
        for (key, counts) in file.contexts {
            let mut cc = ContextCounts::default();
            for (tok, c) in counts {
                if c == 0 {
                    return Err(Error::InvalidInput("zero count in model file".into()));
                }
                cc.total += c;
                cc.counts.insert(tok, c);
            }
            contexts.insert(key.into_boxed_slice(), cc);
        }
        Ok(Self {
            order: file.order,
            add_k: file.add_k,
            vocab,
            contexts,
        })
    }
}

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    order: usize,
    add_k: f64,
    vocab: Vec<String>,
    contexts: Vec<(Vec<TokenId>, Vec<(TokenId, u64)>)>,
}

impl TokenScorer for NGramModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Exact log-probabilities under add-k smoothing of the longest stored
    /// context suffix: `log((count + k) / (total + k * |V|))`.
    fn next_logits(&self, context: &[TokenId]) -> Result<LogitVector> {
        let v = self.vocab.size();
        let (total, counts) = match self.lookup_suffix(context) {
            Some(cc) => (cc.total, Some(&cc.counts)),
            None => (0, None),
        };
        let denom = (total as f64 + self.add_k * v as f64).ln();
        let mut scores = vec![self.add_k.ln() - denom; v];
        if let Some(counts) = counts {
            for (&tok, &c) in counts {
                scores[tok as usize] = (c as f64 + self.add_k).ln() - denom;
            }
        }
        LogitVector::new(scores)
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}
