//! Documents, label maps, and corpus file I/O.
//!
//! A corpus lives in a line-delimited JSON file, one record per line with
//! fields `doc_id`, `text`, `author`, `utility`. Label names are declared in
//! a sidecar manifest (`<stem>.manifest.json`); when the manifest is absent,
//! label maps are built from the observed labels in sorted order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A private document with its de-anonymization and utility labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub author_label: u32,
    pub utility_label: u32,
}

impl Document {
    pub fn new(doc_id: &str, text: &str, author_label: u32, utility_label: u32) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "document {doc_id:?} has empty text"
            )));
        }
        Ok(Self {
            doc_id: doc_id.to_string(),
            text: text.to_string(),
            author_label,
            utility_label,
        })
    }
}

/// Bidirectional map between label names and dense categorical ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelMap {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i as u32).is_some() {
                return Err(Error::InvalidInput(format!("duplicate label {name:?}")));
            }
        }
        Ok(Self { names, index })
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A labeled document collection with its declared label sets.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub authors: LabelMap,
    pub utilities: LabelMap,
}

impl Corpus {
    /// Fraction of documents per author label, in label-id order.
    pub fn author_fractions(&self) -> Vec<f64> {
        fractions(self.docs.iter().map(|d| d.author_label), self.authors.len())
    }

    /// Fraction of documents per utility label, in label-id order.
    pub fn utility_fractions(&self) -> Vec<f64> {
        fractions(
            self.docs.iter().map(|d| d.utility_label),
            self.utilities.len(),
        )
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.doc_id.as_str())
    }
}

fn fractions(labels: impl Iterator<Item = u32>, n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    let mut total = 0usize;
    for l in labels {
        counts[l as usize] += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    doc_id: String,
    text: String,
    author: String,
    utility: String,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    author_labels: Vec<String>,
    utility_labels: Vec<String>,
}

/// Sidecar manifest path for a corpus file: the extension is replaced with
/// `manifest.json`.
pub fn manifest_path(corpus_path: &Path) -> PathBuf {
    corpus_path.with_extension("manifest.json")
}

/// Reads and validates a corpus file.
///
/// Every record is checked against the `Document` invariants; labels must be
/// members of the declared sets when a manifest is present. Failures carry
/// the offending line number.
pub fn ingest(path: &Path) -> Result<Corpus> {
    let manifest = manifest_path(path);
    let declared: Option<ManifestFile> = if manifest.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&manifest)?)?)
    } else {
        None
    };

    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if rec.text.trim().is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("document {:?} has empty text", rec.doc_id),
            });
        }
        records.push((i + 1, rec));
    }

    let (authors, utilities) = match declared {
        Some(m) => (
            LabelMap::from_names(m.author_labels)?,
            LabelMap::from_names(m.utility_labels)?,
        ),
        None => {
            let mut author_names: Vec<String> =
                records.iter().map(|(_, r)| r.author.clone()).collect();
            author_names.sort();
            author_names.dedup();
            let mut utility_names: Vec<String> =
                records.iter().map(|(_, r)| r.utility.clone()).collect();
            utility_names.sort();
            utility_names.dedup();
            (
                LabelMap::from_names(author_names)?,
                LabelMap::from_names(utility_names)?,
            )
        }
    };

    let mut docs = Vec::with_capacity(records.len());
    let mut seen = HashMap::new();
    for (line, rec) in records {
        if let Some(first) = seen.insert(rec.doc_id.clone(), line) {
            return Err(Error::Parse {
                line,
                msg: format!("doc_id {:?} already used at line {first}", rec.doc_id),
            });
        }
        let author = authors.id_of(&rec.author).ok_or_else(|| Error::Parse {
            line,
            msg: format!("author label {:?} not in declared set", rec.author),
        })?;
        let utility = utilities.id_of(&rec.utility).ok_or_else(|| Error::Parse {
            line,
            msg: format!("utility label {:?} not in declared set", rec.utility),
        })?;
        docs.push(Document {
            doc_id: rec.doc_id,
            text: rec.text,
            author_label: author,
            utility_label: utility,
        });
    }

    Ok(Corpus {
        docs,
        authors,
        utilities,
    })
}

/// Writes a corpus and its sidecar manifest.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for doc in &corpus.docs {
        let rec = RecordLine {
            doc_id: doc.doc_id.clone(),
            text: doc.text.clone(),
            author: corpus
                .authors
                .name(doc.author_label)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("author id {} unmapped", doc.author_label))
                })?
                .to_string(),
            utility: corpus
                .utilities
                .name(doc.utility_label)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("utility id {} unmapped", doc.utility_label))
                })?
                .to_string(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let manifest = ManifestFile {
        author_labels: corpus.authors.names().to_vec(),
        utility_labels: corpus.utilities.names().to_vec(),
    };
    std::fs::write(
        manifest_path(path),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}
