//! Synthetic corpus generator for offline end-to-end checks: planted topics
//! with synonym-structured vocabularies plus matching embeddings whose topic
//! terms cluster in vector space.
//!
//! Every topic owns `concepts * synonyms` terms. A query uses the first
//! synonym of its topic's first two concepts; relevant documents draw a
//! random subset of concepts and random synonyms, so a substantial share of
//! relevant documents never contain a query term verbatim and are only
//! reachable through expansion.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Qrels, RawDocument, Topic};
use crate::embeddings::EmbeddingTable;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_topics: usize,
    pub docs_per_topic: usize,
    /// Concepts per topic; each concept has `synonyms` interchangeable terms.
    pub concepts: usize,
    pub synonyms: usize,
    pub background_terms: usize,
    /// Tokens per document, sampled uniformly from this range.
    pub doc_len: (usize, usize),
    /// Probability that a concept appears in a given relevant document.
    pub concept_prob: f64,
    /// Share of a document's tokens drawn from its topic vocabulary.
    pub topical_share: f64,
    /// Share of topical tokens leaked from the next topic's vocabulary,
    /// making neighboring topics confusable.
    pub neighbor_noise: f64,
    /// Decoy terms per topic: vectors near the topic center, but usage
    /// spread uniformly over the whole collection. They surface in feedback
    /// sets at low counts with high similarity, so count-weighting carries
    /// real signal.
    pub decoys_per_topic: usize,
    /// Share of non-topical tokens drawn from the decoy union.
    pub decoy_share: f64,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_topics: 10,
            docs_per_topic: 20,
            concepts: 10,
            synonyms: 3,
            background_terms: 400,
            doc_len: (60, 100),
            concept_prob: 0.45,
            topical_share: 0.4,
            neighbor_noise: 0.1,
            decoys_per_topic: 20,
            decoy_share: 0.12,
            embedding_dim: 16,
            seed: 20_316,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub docs: Vec<RawDocument>,
    pub topics: Vec<Topic>,
    pub qrels: Qrels,
    pub embeddings: EmbeddingTable,
}

fn topic_term(topic: usize, concept: usize, synonym: usize) -> String {
    format!("t{topic}c{concept}s{synonym}")
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
    for x in &mut v {
        *x /= norm;
    }
    v
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Embeddings: one cluster center per topic, small per-concept and
    // per-synonym offsets; background terms get their own isotropic vectors.
    let mut embeddings = EmbeddingTable::new(config.embedding_dim);
    for topic in 0..config.n_topics {
        let center = unit_vector(config.embedding_dim, &mut rng);
        for concept in 0..config.concepts {
            let concept_offset = unit_vector(config.embedding_dim, &mut rng);
            for synonym in 0..config.synonyms {
                let noise = unit_vector(config.embedding_dim, &mut rng);
                let v: Vec<f64> = center
                    .iter()
                    .zip(&concept_offset)
                    .zip(&noise)
                    .map(|((&c, &o), &n)| c + 0.2 * o + 0.2 * n)
                    .collect();
                embeddings
                    .insert(&topic_term(topic, concept, synonym), v)
                    .expect("dimensions agree");
            }
        }
    }
    for b in 0..config.background_terms {
        let v = unit_vector(config.embedding_dim, &mut rng);
        embeddings
            .insert(&format!("bg{b}"), v)
            .expect("dimensions agree");
    }
    let mut decoys = Vec::new();
    for topic in 0..config.n_topics {
        let center: Vec<f64> = {
            // Same center the topic terms use: reconstruct from any synonym
            // by averaging the topic's term vectors.
            let mut sum = vec![0.0; config.embedding_dim];
            let mut n = 0usize;
            for concept in 0..config.concepts {
                for synonym in 0..config.synonyms {
                    let v = embeddings
                        .get(&topic_term(topic, concept, synonym))
                        .expect("term exists");
                    for (s, x) in sum.iter_mut().zip(v) {
                        *s += x;
                    }
                    n += 1;
                }
            }
            sum.into_iter().map(|s| s / n as f64).collect()
        };
        for d in 0..config.decoys_per_topic {
            let noise = unit_vector(config.embedding_dim, &mut rng);
            let v: Vec<f64> = center
                .iter()
                .zip(&noise)
                .map(|(&c, &n)| c + 0.3 * n)
                .collect();
            let term = format!("t{topic}x{d}");
            embeddings.insert(&term, v).expect("dimensions agree");
            decoys.push(term);
        }
    }

    // Documents: concept presence is Bernoulli per document; present
    // concepts contribute random synonyms, the rest is background.
    let mut docs = Vec::new();
    let mut qrels = Qrels::default();
    for topic in 0..config.n_topics {
        for d in 0..config.docs_per_topic {
            let len = rng.random_range(config.doc_len.0..=config.doc_len.1);
            let topical = (len as f64 * config.topical_share).round() as usize;
            let present: Vec<usize> = (0..config.concepts)
                .filter(|_| rng.random_range(0.0..1.0) < config.concept_prob)
                .collect();
            let mut tokens = Vec::with_capacity(len);
            if !present.is_empty() {
                for _ in 0..topical {
                    let leak = rng.random_range(0.0..1.0) < config.neighbor_noise;
                    let from_topic = if leak {
                        (topic + 1) % config.n_topics
                    } else {
                        topic
                    };
                    let concept = if leak {
                        rng.random_range(0..config.concepts)
                    } else {
                        present[rng.random_range(0..present.len())]
                    };
                    let synonym = rng.random_range(0..config.synonyms);
                    tokens.push(topic_term(from_topic, concept, synonym));
                }
            }
            while tokens.len() < len {
                if !decoys.is_empty() && rng.random_range(0.0..1.0) < config.decoy_share {
                    tokens.push(decoys[rng.random_range(0..decoys.len())].clone());
                } else {
                    tokens.push(format!("bg{}", rng.random_range(0..config.background_terms)));
                }
            }
            let doc_id = format!("doc-{topic:02}-{d:03}");
            qrels
                .insert(&format!("{}", topic + 1), &doc_id, 1)
                .expect("unique pairs");
            docs.push(RawDocument {
                doc_id,
                text: tokens.join(" "),
            });
        }
    }

    let topics = (0..config.n_topics)
        .map(|topic| Topic {
            topic_id: format!("{}", topic + 1),
            title: format!(
                "{} {}",
                topic_term(topic, 0, 0),
                topic_term(topic, 1, 0)
            ),
        })
        .collect();

    SynthCorpus {
        docs,
        topics,
        qrels,
        embeddings,
    }
}

/// Paths of the files written by [`write_to_dir`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub docs: PathBuf,
    pub topics: PathBuf,
    pub qrels: PathBuf,
    pub embeddings: PathBuf,
}

/// Materialize the corpus: JSONL documents, TSV topics, TREC qrels, and
/// word2vec-text embeddings.
pub fn write_to_dir(corpus: &SynthCorpus, dir: &Path) -> Result<SynthPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = SynthPaths {
        docs: dir.join("docs.jsonl"),
        topics: dir.join("topics.tsv"),
        qrels: dir.join("qrels.txt"),
        embeddings: dir.join("vectors.txt"),
    };

    let mut f = File::create(&paths.docs).map_err(|e| Error::io(&paths.docs, e))?;
    for doc in &corpus.docs {
        let line = serde_json::json!({ "doc_id": doc.doc_id, "text": doc.text });
        writeln!(f, "{line}").map_err(|e| Error::io(&paths.docs, e))?;
    }

    let mut f = File::create(&paths.topics).map_err(|e| Error::io(&paths.topics, e))?;
    for topic in &corpus.topics {
        writeln!(f, "{}\t{}", topic.topic_id, topic.title).map_err(|e| Error::io(&paths.topics, e))?;
    }

    let mut f = File::create(&paths.qrels).map_err(|e| Error::io(&paths.qrels, e))?;
    for ((topic, doc), grade) in corpus.qrels.iter() {
        writeln!(f, "{topic} 0 {doc} {grade}").map_err(|e| Error::io(&paths.qrels, e))?;
    }

    let mut f = File::create(&paths.embeddings).map_err(|e| Error::io(&paths.embeddings, e))?;
    writeln!(f, "{} {}", corpus.embeddings.len(), corpus.embeddings.dim())
        .map_err(|e| Error::io(&paths.embeddings, e))?;
    for term in corpus.embeddings.terms() {
        let values = corpus.embeddings.get(term).expect("term is present");
        let row: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{term} {}", row.join(" ")).map_err(|e| Error::io(&paths.embeddings, e))?;
    }

    Ok(paths)
}
