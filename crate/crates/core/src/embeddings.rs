//! Word-vector tables and the similarity primitives used for embedded
//! feedback modeling. Supports the two common text formats: word2vec
//! (header line `count dim`, then rows) and GloVe (rows only).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::stem::porter_stem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    Word2vecText,
    GloveText,
}

/// term -> dense vector of fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> EmbeddingTable {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, term: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: vector.len(),
            });
        }
        if self.vectors.insert(term.to_string(), vector).is_some() {
            log::warn!("duplicate embedding for {term:?}: last occurrence wins");
        }
        Ok(())
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.vectors.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// Load a text-format vector file.
    pub fn load(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingTable> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let mut table: Option<EmbeddingTable> = None;
        if format == EmbeddingFormat::Word2vecText {
            // Header: "count dim".
            if let Some((i, line)) = lines.next() {
                let line = line.map_err(|e| Error::io(path, e))?;
                let mut fields = line.split_whitespace();
                let _count: usize = fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::ParseLine {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "bad word2vec header".into(),
                    })?;
                let dim: usize = fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::ParseLine {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "bad word2vec header".into(),
                    })?;
                table = Some(EmbeddingTable::new(dim));
            }
        }

        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let term = fields.next().expect("non-empty line has a first field");
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse().map_err(|_| Error::ParseLine {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("bad vector component {f:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            let table = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.len() != table.dim {
                return Err(Error::ParseLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!(
                        "ragged row: expected {} components, found {}",
                        table.dim,
                        values.len()
                    ),
                });
            }
            table.insert(term, values)?;
        }
        Ok(table.unwrap_or_else(|| EmbeddingTable::new(0)))
    }

    /// Re-key the table to the tokenizer's output space: lowercase the
    /// surface forms and/or collapse them onto Porter stems, averaging the
    /// vectors of all forms that share a key.
    pub fn normalized(&self, lowercase: bool, stem: bool) -> EmbeddingTable {
        if !lowercase && !stem {
            return self.clone();
        }
        let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
        for (term, vec) in &self.vectors {
            let mut key = if lowercase {
                term.to_lowercase()
            } else {
                term.clone()
            };
            if stem {
                key = porter_stem(&key);
            }
            let entry = sums
                .entry(key)
                .or_insert_with(|| (vec![0.0; self.dim], 0));
            for (s, v) in entry.0.iter_mut().zip(vec) {
                *s += v;
            }
            entry.1 += 1;
        }
        let collapsed = sums.len();
        let vectors: BTreeMap<String, Vec<f64>> = sums
            .into_iter()
            .map(|(k, (mut sum, n))| {
                for s in &mut sum {
                    *s /= n as f64;
                }
                (k, sum)
            })
            .collect();
        if collapsed != self.vectors.len() {
            log::info!(
                "embedding table collapsed from {} to {} keys",
                self.vectors.len(),
                collapsed
            );
        }
        EmbeddingTable {
            dim: self.dim,
            vectors,
        }
    }
}

/// Averaged query vector (coordinate-wise mean over the in-table query term
/// occurrences, multiplicity counted).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub values: Vec<f64>,
    pub source_terms: Vec<String>,
}

pub fn query_vector(table: &EmbeddingTable, terms: &[String]) -> Result<QueryVector> {
    let mut sum = vec![0.0; table.dim()];
    let mut used = Vec::new();
    let mut skipped = 0usize;
    for term in terms {
        if let Some(vec) = table.get(term) {
            for (s, v) in sum.iter_mut().zip(vec) {
                *s += v;
            }
            used.push(term.clone());
        } else {
            skipped += 1;
        }
    }
    if used.is_empty() {
        return Err(Error::NoQueryVector);
    }
    if skipped > 0 {
        log::debug!("query vector: {skipped} term occurrence(s) without embeddings skipped");
    }
    let m = used.len() as f64;
    for s in &mut sum {
        *s /= m;
    }
    Ok(QueryVector {
        values: sum,
        source_terms: used,
    })
}

pub fn dot(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// `1 / (1 + exp(-u . v))`.
pub fn sigmoid_sim(u: &[f64], v: &[f64]) -> Result<f64> {
    Ok(1.0 / (1.0 + (-dot(u, v)?).exp()))
}

/// `(u . v) / (|u| |v|)`.
pub fn cosine_sim(u: &[f64], v: &[f64]) -> Result<f64> {
    let uv = dot(u, v)?;
    let nu = dot(u, u)?.sqrt();
    let nv = dot(v, v)?.sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(uv / (nu * nv))
}
