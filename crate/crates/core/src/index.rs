//! Immutable inverted index. Term ids are assigned lexicographically over the
//! collection vocabulary, so ids (and everything derived from them) do not
//! depend on document order. After construction the index is read-only and
//! safe to share across threads.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::corpus::{tokenize, RawDocument, TokenPipeline};
use crate::{Error, Result};

pub type TermId = u32;
pub type DocOrd = u32;

const INDEX_MAGIC: &[u8; 6] = b"PRFIDX";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct Index {
    terms: Vec<String>,
    term_ids: HashMap<String, TermId>,
    postings: Vec<Vec<(DocOrd, u32)>>,
    coll_freq: Vec<u64>,
    doc_ids: Vec<String>,
    doc_len: Vec<u64>,
    total_tokens: u64,
}

impl Index {
    /// Tokenize and count every document. Documents keep their input order as
    /// ordinals; term ids are assigned over the sorted vocabulary.
    pub fn build(docs: &[RawDocument], pipeline: &TokenPipeline) -> Result<Index> {
        let mut seen = HashSet::new();
        for doc in docs {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::DuplicateDocId(doc.doc_id.clone()));
            }
        }

        let tokenized: Vec<Vec<String>> =
            docs.iter().map(|d| tokenize(&d.text, pipeline)).collect();

        let mut vocab: BTreeMap<&str, TermId> = BTreeMap::new();
        for tokens in &tokenized {
            for t in tokens {
                vocab.entry(t.as_str()).or_default();
            }
        }
        let terms: Vec<String> = vocab.keys().map(|t| t.to_string()).collect();
        for (i, slot) in vocab.values_mut().enumerate() {
            *slot = i as TermId;
        }

        let mut postings = vec![Vec::new(); terms.len()];
        let mut coll_freq = vec![0u64; terms.len()];
        let mut doc_len = Vec::with_capacity(docs.len());
        let mut total_tokens = 0u64;
        for (ord, tokens) in tokenized.iter().enumerate() {
            let mut counts: BTreeMap<TermId, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(vocab[t.as_str()]).or_insert(0) += 1;
            }
            for (&tid, &c) in &counts {
                postings[tid as usize].push((ord as DocOrd, c));
                coll_freq[tid as usize] += u64::from(c);
            }
            doc_len.push(tokens.len() as u64);
            total_tokens += tokens.len() as u64;
        }

        let term_ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        Ok(Index {
            terms,
            term_ids,
            postings,
            coll_freq,
            doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
            doc_len,
            total_tokens,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn doc_id(&self, ord: DocOrd) -> &str {
        &self.doc_ids[ord as usize]
    }

    pub fn doc_ord(&self, doc_id: &str) -> Option<DocOrd> {
        self.doc_ids
            .iter()
            .position(|d| d == doc_id)
            .map(|p| p as DocOrd)
    }

    pub fn doc_len(&self, ord: DocOrd) -> u64 {
        self.doc_len[ord as usize]
    }

    pub fn coll_freq(&self, term: TermId) -> u64 {
        self.coll_freq[term as usize]
    }

    pub fn postings(&self, term: TermId) -> &[(DocOrd, u32)] {
        &self.postings[term as usize]
    }

    /// Count of `term` in one document.
    pub fn doc_count(&self, term: TermId, doc: DocOrd) -> u32 {
        let list = &self.postings[term as usize];
        list.binary_search_by_key(&doc, |&(d, _)| d)
            .map(|i| list[i].1)
            .unwrap_or(0)
    }

    /// Maximum-likelihood document model c(w,d) / |d|.
    pub fn p_ml_doc(&self, term: TermId, doc: DocOrd) -> Result<f64> {
        let len = self.doc_len(doc);
        if len == 0 {
            return Err(Error::UndefinedDocModel(self.doc_id(doc).to_string()));
        }
        Ok(f64::from(self.doc_count(term, doc)) / len as f64)
    }

    /// Collection unigram model c(w,C) / |C|. Unknown terms get 0.
    pub fn p_collection(&self, term: TermId) -> f64 {
        if self.total_tokens == 0 {
            return 0.0;
        }
        self.coll_freq(term) as f64 / self.total_tokens as f64
    }

    /// Pool term counts over a set of feedback documents.
    pub fn feedback_counts(&self, doc_ords: &[DocOrd]) -> Result<FeedbackSet> {
        if doc_ords.is_empty() {
            return Err(Error::EmptyFeedbackSet);
        }
        let mut term_counts: BTreeMap<TermId, u64> = BTreeMap::new();
        let mut total = 0u64;
        for &ord in doc_ords {
            let target = ord;
            for (tid, list) in self.postings.iter().enumerate() {
                if let Ok(i) = list.binary_search_by_key(&target, |&(d, _)| d) {
                    *term_counts.entry(tid as TermId).or_insert(0) += u64::from(list[i].1);
                    total += u64::from(list[i].1);
                }
            }
        }
        Ok(FeedbackSet {
            doc_ords: doc_ords.to_vec(),
            term_counts,
            total,
        })
    }

    /// Write the postings/statistics as a versioned binary file and the
    /// vocabulary as a TSV sidecar (`<path>.vocab.tsv`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::io(path, e);
        w.write_all(INDEX_MAGIC).map_err(io_err)?;
        w.write_u32::<LittleEndian>(INDEX_VERSION).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.total_tokens).map_err(io_err)?;
        w.write_u32::<LittleEndian>(self.doc_ids.len() as u32)
            .map_err(io_err)?;
        for (doc_id, &len) in self.doc_ids.iter().zip(&self.doc_len) {
            w.write_u32::<LittleEndian>(doc_id.len() as u32).map_err(io_err)?;
            w.write_all(doc_id.as_bytes()).map_err(io_err)?;
            w.write_u64::<LittleEndian>(len).map_err(io_err)?;
        }
        w.write_u32::<LittleEndian>(self.terms.len() as u32)
            .map_err(io_err)?;
        for list in &self.postings {
            w.write_u32::<LittleEndian>(list.len() as u32).map_err(io_err)?;
            for &(doc, count) in list {
                w.write_u32::<LittleEndian>(doc).map_err(io_err)?;
                w.write_u32::<LittleEndian>(count).map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)?;

        let vocab_path = vocab_sidecar(path);
        let vocab_file = File::create(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let mut vw = BufWriter::new(vocab_file);
        for (id, term) in self.terms.iter().enumerate() {
            writeln!(vw, "{}\t{}\t{}", id, term, self.coll_freq[id])
                .map_err(|e| Error::io(&vocab_path, e))?;
        }
        vw.flush().map_err(|e| Error::io(&vocab_path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Index> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let io_err = |e| Error::io(path, e);
        let bad = |message: &str| Error::BadIndexFile {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != INDEX_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io_err)?;
        if version != INDEX_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let total_tokens = r.read_u64::<LittleEndian>().map_err(io_err)?;
        let n_docs = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let mut doc_ids = Vec::with_capacity(n_docs);
        let mut doc_len = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            let len = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(io_err)?;
            doc_ids.push(String::from_utf8(buf).map_err(|_| bad("doc_id is not utf-8"))?);
            doc_len.push(r.read_u64::<LittleEndian>().map_err(io_err)?);
        }
        let n_terms = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let mut postings = Vec::with_capacity(n_terms);
        let mut coll_freq = vec![0u64; n_terms];
        for freq in coll_freq.iter_mut() {
            let n = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
            let mut list = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = r.read_u32::<LittleEndian>().map_err(io_err)?;
                let count = r.read_u32::<LittleEndian>().map_err(io_err)?;
                *freq += u64::from(count);
                list.push((doc, count));
            }
            postings.push(list);
        }

        let vocab_path = vocab_sidecar(path);
        let vocab_file = File::open(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let mut terms = vec![String::new(); n_terms];
        for (i, line) in std::io::BufRead::lines(BufReader::new(vocab_file)).enumerate() {
            let line = line.map_err(|e| Error::io(&vocab_path, e))?;
            let mut fields = line.split('\t');
            let id: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad(&format!("vocab sidecar line {}: bad term id", i + 1)))?;
            let term = fields
                .next()
                .ok_or_else(|| bad(&format!("vocab sidecar line {}: missing term", i + 1)))?;
            if id >= n_terms {
                return Err(bad(&format!("vocab sidecar line {}: id out of range", i + 1)));
            }
            terms[id] = term.to_string();
        }
        let term_ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        Ok(Index {
            terms,
            term_ids,
            postings,
            coll_freq,
            doc_ids,
            doc_len,
            total_tokens,
        })
    }
}

fn vocab_sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".vocab.tsv");
    path.with_file_name(name)
}

/// Pooled statistics of the feedback documents F.
#[derive(Debug, Clone)]
pub struct FeedbackSet {
    doc_ords: Vec<DocOrd>,
    term_counts: BTreeMap<TermId, u64>,
    total: u64,
}

impl FeedbackSet {
    pub fn doc_ords(&self) -> &[DocOrd] {
        &self.doc_ords
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ords.len()
    }

    /// c(w, F): pooled count of a term over the feedback documents.
    pub fn count(&self, term: TermId) -> u64 {
        self.term_counts.get(&term).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// p_ml(w | theta_F) = c(w,F) / sum_w c(w,F).
    pub fn p_ml(&self, term: TermId) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(term) as f64 / self.total as f64
    }

    /// Terms occurring in F, ascending by term id.
    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.term_counts.keys().copied()
    }

    pub fn num_terms(&self) -> usize {
        self.term_counts.len()
    }
}
