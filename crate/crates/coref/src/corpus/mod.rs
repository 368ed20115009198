//! Document data model, JSON-lines corpus readers/writers, and pretrained
//! embedding tables.
//!
//! Documents are immutable after validation and safe to share read-only.

pub mod synthetic;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A tokenized document with speakers, genre, and gold mention clusters.
/// Cluster spans use flattened token indices with inclusive ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_key: String,
    pub genre: String,
    pub sentences: Vec<Vec<String>>,
    pub speakers: Vec<Vec<String>>,
    pub clusters: Vec<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_clusters: Option<Vec<Vec<(usize, usize)>>>,
}

impl Document {
    /// Total token count T.
    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Flattened-index offset of each sentence start.
    pub fn sentence_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sentences.len());
        let mut acc = 0;
        for s in &self.sentences {
            offsets.push(acc);
            acc += s.len();
        }
        offsets
    }

    pub fn flat_tokens(&self) -> Vec<&str> {
        self.sentences
            .iter()
            .flatten()
            .map(String::as_str)
            .collect()
    }

    pub fn flat_speakers(&self) -> Vec<&str> {
        self.speakers
            .iter()
            .flatten()
            .map(String::as_str)
            .collect()
    }

    /// Sentence index containing flattened token `t`.
    pub fn sentence_of(&self, t: usize) -> usize {
        let offsets = self.sentence_offsets();
        match offsets.binary_search(&t) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// Text of a flattened span, space-joined.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        self.flat_tokens()[start..=end].join(" ")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::InvalidDocument {
                doc_key: self.doc_key.clone(),
                msg,
            })
        };
        if self.sentences.is_empty() || self.sentences.iter().any(Vec::is_empty) {
            return fail("empty sentence".into());
        }
        if self.speakers.len() != self.sentences.len()
            || self
                .speakers
                .iter()
                .zip(&self.sentences)
                .any(|(sp, se)| sp.len() != se.len())
        {
            return fail("speakers do not align one-to-one with tokens".into());
        }
        let t = self.num_tokens();
        let offsets = self.sentence_offsets();
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        for cluster in &self.clusters {
            if cluster.is_empty() {
                return fail("empty cluster".into());
            }
            for &(start, end) in cluster {
                if end < start || end >= t {
                    return fail(format!("span ({start},{end}) out of range or inverted"));
                }
                let sent = match offsets.binary_search(&start) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                let sent_end = offsets[sent] + self.sentences[sent].len() - 1;
                if end > sent_end {
                    return fail(format!("span ({start},{end}) crosses a sentence boundary"));
                }
                if !seen.insert((start, end)) {
                    return fail(format!("span ({start},{end}) appears in two clusters"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered list of documents forming one corpus split.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub name: String,
    pub docs: Vec<Document>,
}

impl CorpusSplit {
    pub fn validate(&self) -> Result<()> {
        let mut keys = HashSet::new();
        for doc in &self.docs {
            doc.validate()?;
            if !keys.insert(&doc.doc_key) {
                return Err(Error::InvalidDocument {
                    doc_key: doc.doc_key.clone(),
                    msg: "duplicate doc_key within split".into(),
                });
            }
        }
        Ok(())
    }
}

/// Read a JSON-lines corpus file, validating every document.
pub fn load_documents(path: &Path, split_name: &str) -> Result<CorpusSplit> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut docs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        doc.validate().map_err(|e| Error::MalformedRecord {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        docs.push(doc);
    }
    let split = CorpusSplit {
        name: split_name.to_string(),
        docs,
    };
    split.validate()?;
    Ok(split)
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed pretrained word vectors. Out-of-vocabulary words map to zeros.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dimension: usize,
    map: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Empty table; every lookup yields the zero vector.
    pub fn zeros(dimension: usize) -> Self {
        Self {
            dimension,
            map: HashMap::new(),
        }
    }

    pub fn from_entries(dimension: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        let mut map = HashMap::new();
        for (word, vec) in entries {
            assert_eq!(vec.len(), dimension);
            map.entry(word).or_insert(vec);
        }
        Self { dimension, map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Vector for `word`; zeros when out of vocabulary.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        self.map
            .get(word)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dimension])
    }
}

/// Load whitespace-separated embeddings: one word then `dimension` reals per
/// line. Duplicate words keep the first occurrence.
pub fn load_embeddings(path: &Path, dimension: usize) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut map = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap().to_string();
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| Error::MalformedRecord {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("not a number: {p}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dimension {
            return Err(Error::MalformedRecord {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected {dimension} values, found {}", values.len()),
            });
        }
        map.entry(word).or_insert(values);
    }
    Ok(EmbeddingTable { dimension, map })
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut words: Vec<&String> = table.map.keys().collect();
    words.sort();
    for word in words {
        write!(w, "{word}")?;
        for v in &table.map[word] {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
