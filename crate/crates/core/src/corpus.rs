//! Collection, topic, and qrels parsing plus text normalization.
//!
//! Documents arrive either as TREC SGML (`<DOC><DOCNO>..</DOCNO>..</DOC>`) or
//! as JSONL (`{"doc_id": .., "text": ..}`). Topics arrive in the TREC format
//! (`<num>`/`<title>`) or as two-column TSV. Qrels use the standard 4-column
//! format. Normalization is lowercase -> stopword removal -> Porter stemming,
//! with each stage independently switchable.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;

use crate::stem::porter_stem;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    pub title: String,
}

/// Relevance judgments keyed by (topic_id, doc_id). Grades > 0 are relevant.
#[derive(Debug, Clone, Default)]
pub struct Qrels {
    judgments: BTreeMap<(String, String), u32>,
}

impl Qrels {
    pub fn insert(&mut self, topic_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let key = (topic_id.to_string(), doc_id.to_string());
        if self.judgments.contains_key(&key) {
            return Err(Error::DuplicateJudgment {
                topic_id: topic_id.to_string(),
                doc_id: doc_id.to_string(),
            });
        }
        self.judgments.insert(key, grade);
        Ok(())
    }

    pub fn grade(&self, topic_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments
            .get(&(topic_id.to_string(), doc_id.to_string()))
            .copied()
    }

    /// Doc ids judged relevant (grade > 0) for a topic.
    pub fn relevant_docs(&self, topic_id: &str) -> HashSet<String> {
        self.judgments
            .iter()
            .filter(|((t, _), &g)| t == topic_id && g > 0)
            .map(|((_, d), _)| d.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &u32)> {
        self.judgments.iter()
    }
}

/// Text normalization settings, applied in the fixed order
/// lowercase -> stopword removal -> stemming.
#[derive(Debug, Clone, Default)]
pub struct TokenPipeline {
    pub lowercase: bool,
    pub stopwords: HashSet<String>,
    pub stem: bool,
}

impl TokenPipeline {
    /// Lowercasing and stemming on, no stopwords.
    pub fn english() -> Self {
        TokenPipeline {
            lowercase: true,
            stopwords: HashSet::new(),
            stem: true,
        }
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }
}

/// Split on non-alphanumeric codepoints and run the pipeline stages.
pub fn tokenize(text: &str, pipeline: &TokenPipeline) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if pipeline.lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .filter(|t| !pipeline.stopwords.contains(t))
        .map(|t| if pipeline.stem { porter_stem(&t) } else { t })
        .filter(|t| !t.is_empty())
        .collect()
}

/// One term per line, UTF-8. Blank lines ignored.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut set = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let term = line.trim();
        if !term.is_empty() {
            set.insert(term.to_string());
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocFormat {
    TrecSgml,
    Jsonl,
}

pub fn parse_documents(path: &Path, format: DocFormat) -> Result<Vec<RawDocument>> {
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    let docs = match format {
        DocFormat::Jsonl => parse_jsonl(path, &raw)?,
        DocFormat::TrecSgml => parse_trec_sgml(path, &raw)?,
    };
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateDocId(doc.doc_id.clone()));
        }
    }
    Ok(docs)
}

#[derive(Deserialize)]
struct JsonlDoc {
    doc_id: String,
    text: String,
}

fn parse_jsonl(path: &Path, raw: &str) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut offset = 0u64;
    for (ordinal, line) in raw.lines().enumerate() {
        if !line.trim().is_empty() {
            let parsed: JsonlDoc =
                serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                    path: path.to_path_buf(),
                    ordinal,
                    offset,
                    message: e.to_string(),
                })?;
            if parsed.doc_id.is_empty() {
                return Err(Error::MalformedRecord {
                    path: path.to_path_buf(),
                    ordinal,
                    offset,
                    message: "empty doc_id".into(),
                });
            }
            docs.push(RawDocument {
                doc_id: parsed.doc_id,
                text: parsed.text,
            });
        }
        offset += line.len() as u64 + 1;
    }
    Ok(docs)
}

fn parse_trec_sgml(path: &Path, raw: &str) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut rest = raw;
    let mut pos = 0u64;
    let mut ordinal = 0usize;
    let malformed = |ordinal: usize, offset: u64, message: &str| Error::MalformedRecord {
        path: path.to_path_buf(),
        ordinal,
        offset,
        message: message.to_string(),
    };
    while let Some(start) = rest.find("<DOC>") {
        let doc_offset = pos + start as u64;
        let after = &rest[start + 5..];
        let end = after
            .find("</DOC>")
            .ok_or_else(|| malformed(ordinal, doc_offset, "missing </DOC>"))?;
        let body = &after[..end];
        let docno_start = body
            .find("<DOCNO>")
            .ok_or_else(|| malformed(ordinal, doc_offset, "missing <DOCNO>"))?;
        let docno_rest = &body[docno_start + 7..];
        let docno_end = docno_rest
            .find("</DOCNO>")
            .ok_or_else(|| malformed(ordinal, doc_offset, "missing </DOCNO>"))?;
        let doc_id = docno_rest[..docno_end].trim().to_string();
        if doc_id.is_empty() {
            return Err(malformed(ordinal, doc_offset, "empty DOCNO"));
        }
        // Everything inside <DOC> except the DOCNO element is body text;
        // remaining tags are dropped during tokenization anyway.
        let mut text = String::new();
        text.push_str(&body[..docno_start]);
        text.push(' ');
        text.push_str(&docno_rest[docno_end + 8..]);
        docs.push(RawDocument {
            doc_id,
            text: strip_tags(&text),
        });
        ordinal += 1;
        pos += (start + 5 + end + 6) as u64;
        rest = &after[end + 6..];
    }
    Ok(docs)
}

/// Replace SGML tags with spaces so tag names never become terms.
fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match c {
            '<' => {
                in_tag = true;
                out.push(' ');
            }
            '>' => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

/// TREC topics (`<num>`, `<title>`) or two-column TSV, detected per file.
pub fn parse_topics(path: &Path) -> Result<Vec<Topic>> {
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.contains("<num>") {
        parse_trec_topics(&raw)
    } else {
        parse_tsv_topics(path, &raw)
    }
}

fn parse_tsv_topics(path: &Path, raw: &str) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, title) = line.split_once('\t').ok_or_else(|| Error::ParseLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected two tab-separated columns".into(),
        })?;
        let topic_id = id.trim().to_string();
        let title = title.trim().to_string();
        if title.is_empty() {
            return Err(Error::MissingTitle(topic_id));
        }
        topics.push(Topic { topic_id, title });
    }
    Ok(topics)
}

fn parse_trec_topics(raw: &str) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    for chunk in raw.split("<num>").skip(1) {
        let num_end = chunk
            .find('<')
            .unwrap_or(chunk.len());
        let topic_id = chunk[..num_end]
            .trim()
            .trim_start_matches("Number:")
            .trim()
            .to_string();
        let title_start = chunk
            .find("<title>")
            .ok_or_else(|| Error::MissingTitle(topic_id.clone()))?;
        let title_rest = &chunk[title_start + 7..];
        let title_end = title_rest.find('<').unwrap_or(title_rest.len());
        let title = title_rest[..title_end].trim().to_string();
        if title.is_empty() {
            return Err(Error::MissingTitle(topic_id));
        }
        topics.push(Topic { topic_id, title });
    }
    Ok(topics)
}

/// Standard 4-column qrels: `topic 0 docid grade`.
pub fn parse_qrels(path: &Path) -> Result<Qrels> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut qrels = Qrels::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::ParseLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        let grade: u32 = fields[3].parse().map_err(|_| Error::ParseLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("non-integer relevance grade {:?}", fields[3]),
        })?;
        qrels.insert(fields[0], fields[2], grade)?;
    }
    Ok(qrels)
}
