//! KL-divergence ranking with Dirichlet smoothing.
//!
//! Scoring uses the rank-equivalent cross-entropy form
//! `score(q,d) = sum_w p(w|theta_q) log p(w|d)` with the query-entropy
//! constant dropped. [`retrieve`] accumulates the same quantity over postings
//! so only documents containing query terms pay per-term work; [`score_kl`]
//! is the direct per-document sum used by tests and tools.

use std::collections::BTreeMap;
use std::io::Write;

use crate::index::{DocOrd, Index, TermId};
use crate::{Error, Result};

/// Sparse probability distribution over vocabulary terms. All stored weights
/// are positive and sum to 1 (up to rounding).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryLm {
    weights: BTreeMap<TermId, f64>,
}

impl QueryLm {
    /// Normalizes positive entries; zero and negative weights are dropped.
    pub fn from_weights(weights: impl IntoIterator<Item = (TermId, f64)>) -> QueryLm {
        let mut map: BTreeMap<TermId, f64> = BTreeMap::new();
        for (t, w) in weights {
            if w > 0.0 {
                *map.entry(t).or_insert(0.0) += w;
            }
        }
        let total: f64 = map.values().sum();
        if total > 0.0 {
            for w in map.values_mut() {
                *w /= total;
            }
        }
        QueryLm { weights: map }
    }

    pub fn weight(&self, term: TermId) -> f64 {
        self.weights.get(&term).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.weights.iter().map(|(&t, &w)| (t, w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Ranked documents for one query, scores non-increasing, ties broken by
/// ascending external doc id.
#[derive(Debug, Clone)]
pub struct ScoredList {
    pub query_id: String,
    pub entries: Vec<(DocOrd, f64)>,
}

impl ScoredList {
    pub fn doc_ords(&self) -> Vec<DocOrd> {
        self.entries.iter().map(|&(d, _)| d).collect()
    }

    pub fn top(&self, k: usize) -> Vec<DocOrd> {
        self.entries.iter().take(k).map(|&(d, _)| d).collect()
    }

    /// Append this ranking in TREC run format: `topic Q0 docid rank score tag`.
    pub fn write_trec(&self, index: &Index, tag: &str, out: &mut impl Write) -> Result<()> {
        for (rank, &(doc, score)) in self.entries.iter().enumerate() {
            writeln!(
                out,
                "{} Q0 {} {} {:.6} {}",
                self.query_id,
                index.doc_id(doc),
                rank + 1,
                score,
                tag
            )
            .map_err(|e| Error::io("<run output>", e))?;
        }
        Ok(())
    }
}

/// Maximum-likelihood query model over the terms present in the vocabulary.
/// Out-of-vocabulary terms are dropped and the remaining mass renormalized.
pub fn mle_query(index: &Index, query_id: &str, terms: &[String]) -> Result<QueryLm> {
    let mut counts: BTreeMap<TermId, f64> = BTreeMap::new();
    let mut dropped = 0usize;
    for term in terms {
        match index.term_id(term) {
            Some(id) => *counts.entry(id).or_insert(0.0) += 1.0,
            None => dropped += 1,
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyQuery(query_id.to_string()));
    }
    if dropped > 0 {
        log::warn!("query {query_id}: {dropped} term(s) not in vocabulary, dropped");
    }
    Ok(QueryLm::from_weights(counts))
}

/// Dirichlet-smoothed document model `(c(w,d) + mu p(w|C)) / (|d| + mu)`.
pub fn dirichlet_prob(index: &Index, term: TermId, doc: DocOrd, mu: f64) -> Result<f64> {
    let len = index.doc_len(doc);
    if mu <= 0.0 && len == 0 {
        return Err(Error::UndefinedDocModel(index.doc_id(doc).to_string()));
    }
    let c = f64::from(index.doc_count(term, doc));
    Ok((c + mu * index.p_collection(term)) / (len as f64 + mu))
}

/// Direct rank-equivalent KL score of one document. Query terms with zero
/// collection probability are skipped.
pub fn score_kl(index: &Index, qlm: &QueryLm, doc: DocOrd, mu: f64) -> Result<f64> {
    let mut score = 0.0;
    for (term, q_w) in qlm.iter() {
        if index.p_collection(term) == 0.0 {
            continue;
        }
        score += q_w * dirichlet_prob(index, term, doc, mu)?.ln();
    }
    Ok(score)
}

/// Top-k retrieval over every non-empty document.
///
/// Scores are accumulated over the postings of the query terms:
/// `score(d) = sum_w q_w log(mu p_C(w)) - log(|d|+mu)
///           + sum_{w in d} q_w log(1 + c(w,d) / (mu p_C(w)))`,
/// which equals the direct sum in [`score_kl`] up to rounding.
pub fn retrieve(index: &Index, qlm: &QueryLm, query_id: &str, k: usize, mu: f64) -> Result<ScoredList> {
    assert!(k >= 1, "retrieval depth must be at least 1");
    let n_docs = index.num_docs();
    if n_docs == 0 {
        return Ok(ScoredList {
            query_id: query_id.to_string(),
            entries: Vec::new(),
        });
    }

    let mut in_vocab: Vec<(TermId, f64)> = Vec::new();
    let mut base = 0.0;
    for (term, q_w) in qlm.iter() {
        let p_c = index.p_collection(term);
        if p_c == 0.0 {
            log::warn!(
                "query {query_id}: term {:?} has no collection mass, skipped in scoring",
                index.term(term)
            );
            continue;
        }
        base += q_w * (mu * p_c).ln();
        in_vocab.push((term, q_w));
    }

    let mut scores = vec![0.0f64; n_docs];
    for &(term, q_w) in &in_vocab {
        let p_c = index.p_collection(term);
        for &(doc, count) in index.postings(term) {
            scores[doc as usize] += q_w * (1.0 + f64::from(count) / (mu * p_c)).ln();
        }
    }

    let mut entries: Vec<(DocOrd, f64)> = (0..n_docs as DocOrd)
        .filter(|&d| index.doc_len(d) > 0)
        .map(|d| {
            let len_term = (index.doc_len(d) as f64 + mu).ln();
            (d, base - len_term + scores[d as usize])
        })
        .collect();
    entries.sort_by(|&(da, sa), &(db, sb)| {
        sb.partial_cmp(&sa)
            .expect("scores are finite")
            .then_with(|| index.doc_id(da).cmp(index.doc_id(db)))
    });
    entries.truncate(k);
    Ok(ScoredList {
        query_id: query_id.to_string(),
        entries,
    })
}

/// Interpolate a feedback model with the original query model:
/// `p(w|theta'_q) = (1 - alpha) p(w|theta_F) + alpha p_ml(w|q)`.
pub fn interpolate_query(feedback: &QueryLm, original: &QueryLm, alpha: f64) -> Result<QueryLm> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha_interp",
            value: alpha,
            range: "[0, 1]",
        });
    }
    let mut weights: BTreeMap<TermId, f64> = BTreeMap::new();
    for (t, w) in feedback.iter() {
        *weights.entry(t).or_insert(0.0) += (1.0 - alpha) * w;
    }
    for (t, w) in original.iter() {
        *weights.entry(t).or_insert(0.0) += alpha * w;
    }
    Ok(QueryLm::from_weights(weights))
}
