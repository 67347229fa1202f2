//! Classic pseudo-relevance feedback models: relevance models (RM1/RM2,
//! giving RM3/RM4 after interpolation), the EM mixture model, divergence
//! minimization (DMM) and its maximum-entropy generalization (MEDMM), and
//! NMF-based query re-weighting (RFMF).
//!
//! All models share the same candidate support: every term occurring in the
//! feedback documents (RFMF additionally keeps the original query terms).
//! Document models inside the estimators use the same Dirichlet `mu` as
//! retrieval. Every model returns a normalized distribution.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::index::{FeedbackSet, Index, TermId};
use crate::retrieval::{dirichlet_prob, QueryLm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMethod {
    Rm1,
    Rm2,
    Mixture,
    Dmm,
    Medmm,
    Rfmf,
    Ecdmm,
}

/// A feedback language model: normalized term weights plus the method that
/// produced them.
#[derive(Debug, Clone)]
pub struct FeedbackLm {
    lm: QueryLm,
    pub method: FeedbackMethod,
}

impl FeedbackLm {
    pub fn new(lm: QueryLm, method: FeedbackMethod) -> FeedbackLm {
        FeedbackLm { lm, method }
    }

    pub fn lm(&self) -> &QueryLm {
        &self.lm
    }

    pub fn into_lm(self) -> QueryLm {
        self.lm
    }

    pub fn weight(&self, term: TermId) -> f64 {
        self.lm.weight(term)
    }

    /// Terms by descending weight, ties by term string.
    pub fn ranked_terms(&self, index: &Index) -> Vec<(TermId, f64)> {
        let mut terms: Vec<(TermId, f64)> = self.lm.iter().collect();
        terms.sort_by(|&(ta, wa), &(tb, wb)| {
            wb.partial_cmp(&wa)
                .expect("weights are finite")
                .then_with(|| index.term(ta).cmp(index.term(tb)))
        });
        terms
    }
}

/// Per-iteration trace of the mixture EM run.
#[derive(Debug, Clone)]
pub struct MixtureTrace {
    pub iterations: usize,
    pub loglik: Vec<f64>,
    pub converged: bool,
}

/// NMF factors and the per-iteration Frobenius reconstruction error.
#[derive(Debug, Clone)]
pub struct NmfFactors {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub residuals: Vec<f64>,
}

/// Smoothed query likelihood `prod_i p(q_i | theta_d)` for one document.
fn query_likelihood(index: &Index, query_terms: &[TermId], doc: u32, mu: f64) -> Result<f64> {
    let mut product = 1.0;
    for &q in query_terms {
        product *= dirichlet_prob(index, q, doc, mu)?;
    }
    Ok(product)
}

/// RM1: `p(w|theta_q) ∝ sum_{d in F} p(w|theta_d) p(theta_d) prod_i p(q_i|theta_d)`
/// with a uniform document prior `p(theta_d) = 1/|F|`.
pub fn rm1(
    index: &Index,
    fb: &FeedbackSet,
    query_terms: &[TermId],
    mu: f64,
) -> Result<FeedbackLm> {
    let prior = 1.0 / fb.num_docs() as f64;
    let likelihoods: Vec<f64> = fb
        .doc_ords()
        .iter()
        .map(|&d| query_likelihood(index, query_terms, d, mu))
        .collect::<Result<_>>()?;
    if likelihoods.iter().all(|&l| l == 0.0) {
        return Err(Error::DegenerateFeedback);
    }
    let mut weights = BTreeMap::new();
    for w in fb.terms() {
        let mut mass = 0.0;
        for (&d, &ql) in fb.doc_ords().iter().zip(&likelihoods) {
            mass += dirichlet_prob(index, w, d, mu)? * prior * ql;
        }
        weights.insert(w, mass);
    }
    Ok(FeedbackLm::new(
        QueryLm::from_weights(weights),
        FeedbackMethod::Rm1,
    ))
}

/// RM2: `p(w|theta_q) ∝ p(w) prod_i sum_{d in F} p(q_i|theta_d) p(w|theta_d) p(theta_d) / p(w)`
/// with `p(w) = p(w|C)` and a uniform document prior.
pub fn rm2(
    index: &Index,
    fb: &FeedbackSet,
    query_terms: &[TermId],
    mu: f64,
) -> Result<FeedbackLm> {
    let prior = 1.0 / fb.num_docs() as f64;
    let mut weights = BTreeMap::new();
    let mut total = 0.0;
    for w in fb.terms() {
        let p_w = index.p_collection(w);
        if p_w == 0.0 {
            continue;
        }
        let mut product = p_w;
        for &q in query_terms {
            let mut inner = 0.0;
            for &d in fb.doc_ords() {
                inner +=
                    dirichlet_prob(index, q, d, mu)? * dirichlet_prob(index, w, d, mu)? * prior
                        / p_w;
            }
            product *= inner;
        }
        total += product;
        weights.insert(w, product);
    }
    if total == 0.0 {
        return Err(Error::DegenerateFeedback);
    }
    Ok(FeedbackLm::new(
        QueryLm::from_weights(weights),
        FeedbackMethod::Rm2,
    ))
}

/// Two-component mixture model fit by EM. The E-step estimates per-term
/// topicality against the collection background; the M-step re-estimates the
/// feedback model from topicality-weighted counts. Initialized with
/// `p_ml(w|theta_F)`.
pub fn mixture_em(
    index: &Index,
    fb: &FeedbackSet,
    lambda_mix: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(FeedbackLm, MixtureTrace)> {
    if !(0.0..1.0).contains(&lambda_mix) {
        return Err(Error::InvalidParameter {
            name: "lambda_mix",
            value: lambda_mix,
            range: "[0, 1)",
        });
    }
    let terms: Vec<TermId> = fb.terms().collect();
    let counts: Vec<f64> = terms.iter().map(|&w| fb.count(w) as f64).collect();
    let p_coll: Vec<f64> = terms.iter().map(|&w| index.p_collection(w)).collect();
    let mut p: Vec<f64> = terms.iter().map(|&w| fb.p_ml(w)).collect();

    let loglik_of = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&p_coll)
            .zip(&counts)
            .map(|((&pw, &pc), &c)| c * ((1.0 - lambda_mix) * pw + lambda_mix * pc).ln())
            .sum()
    };

    let mut trace = MixtureTrace {
        iterations: 0,
        loglik: Vec::new(),
        converged: false,
    };
    for _ in 0..max_iter {
        // E-step: topicality of each term under the current model.
        let t: Vec<f64> = p
            .iter()
            .zip(&p_coll)
            .map(|(&pw, &pc)| {
                let top = (1.0 - lambda_mix) * pw;
                top / (top + lambda_mix * pc)
            })
            .collect();
        // M-step: renormalized topicality-weighted counts.
        let denom: f64 = counts.iter().zip(&t).map(|(&c, &tw)| c * tw).sum();
        let next: Vec<f64> = counts
            .iter()
            .zip(&t)
            .map(|(&c, &tw)| c * tw / denom)
            .collect();
        let delta = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        p = next;
        trace.iterations += 1;
        trace.loglik.push(loglik_of(&p));
        if delta < tol {
            trace.converged = true;
            break;
        }
    }
    let weights: BTreeMap<TermId, f64> = terms.iter().copied().zip(p).collect();
    Ok((
        FeedbackLm::new(QueryLm::from_weights(weights), FeedbackMethod::Mixture),
        trace,
    ))
}

/// Exponentiate and normalize log-scale weights over candidates.
fn exp_normalize(log_weights: BTreeMap<TermId, f64>) -> QueryLm {
    let max = log_weights
        .values()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    QueryLm::from_weights(
        log_weights
            .into_iter()
            .map(|(t, lw)| (t, (lw - max).exp())),
    )
}

/// Divergence minimization model:
/// `p(w|theta_F) ∝ exp( 1/(1-lambda) * 1/|F| * sum_d log p(w|theta_d)
///                      - lambda/(1-lambda) * log p(w|C) )`.
pub fn dmm(index: &Index, fb: &FeedbackSet, lambda: f64, mu: f64) -> Result<FeedbackLm> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            range: "[0, 1)",
        });
    }
    let inv = 1.0 / (1.0 - lambda);
    let n_docs = fb.num_docs() as f64;
    let mut log_weights = BTreeMap::new();
    for w in fb.terms() {
        let mut doc_sum = 0.0;
        for &d in fb.doc_ords() {
            doc_sum += dirichlet_prob(index, w, d, mu)?.ln();
        }
        let exponent = inv * doc_sum / n_docs - lambda * inv * index.p_collection(w).ln();
        log_weights.insert(w, exponent);
    }
    Ok(FeedbackLm::new(
        exp_normalize(log_weights),
        FeedbackMethod::Dmm,
    ))
}

/// Maximum-entropy divergence minimization, solved in closed form with a
/// uniform `alpha_d = 1/|F|`:
/// `p(w|theta_F) ∝ exp( (sum_d alpha_d log p(w|theta_d) - lambda log p(w|C)) / beta )`.
///
/// With `beta = 1 - lambda` this reduces exactly to [`dmm`].
pub fn medmm(
    index: &Index,
    fb: &FeedbackSet,
    lambda: f64,
    beta: f64,
    mu: f64,
) -> Result<FeedbackLm> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            range: "[0, 1)",
        });
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            range: "(0, inf)",
        });
    }
    let alpha_d = 1.0 / fb.num_docs() as f64;
    let mut log_weights = BTreeMap::new();
    for w in fb.terms() {
        let mut doc_sum = 0.0;
        for &d in fb.doc_ords() {
            doc_sum += alpha_d * dirichlet_prob(index, w, d, mu)?.ln();
        }
        log_weights.insert(w, (doc_sum - lambda * index.p_collection(w).ln()) / beta);
    }
    Ok(FeedbackLm::new(
        exp_normalize(log_weights),
        FeedbackMethod::Medmm,
    ))
}

/// RFMF: factorize the nonnegative (|F|+1) x n_terms count matrix (feedback
/// documents plus the query as the final row, scaled to the mean feedback
/// document length) and read the re-weighted query model off the
/// reconstruction's query row.
pub fn rfmf(
    index: &Index,
    fb: &FeedbackSet,
    original: &QueryLm,
    rank: usize,
    iters: usize,
    rng_seed: u64,
) -> Result<(QueryLm, NmfFactors)> {
    // Candidate columns: terms of F plus the original query's support.
    let mut columns: Vec<TermId> = fb.terms().collect();
    for (t, _) in original.iter() {
        if fb.count(t) == 0 {
            columns.push(t);
        }
    }
    columns.sort_unstable();
    let n_terms = columns.len();
    let m = fb.num_docs() + 1;
    if rank < 1 || rank > m.min(n_terms) {
        return Err(Error::InvalidParameter {
            name: "rank",
            value: rank as f64,
            range: "[1, min(|F|+1, n_terms)]",
        });
    }

    let mut a = Array2::<f64>::zeros((m, n_terms));
    for (i, &d) in fb.doc_ords().iter().enumerate() {
        for (j, &w) in columns.iter().enumerate() {
            a[[i, j]] = f64::from(index.doc_count(w, d));
        }
    }
    let mean_len = fb
        .doc_ords()
        .iter()
        .map(|&d| index.doc_len(d) as f64)
        .sum::<f64>()
        / fb.num_docs() as f64;
    for (j, &w) in columns.iter().enumerate() {
        // `original` is normalized, so weight(w) * mean_len gives the query
        // row the same total mass as an average feedback document.
        a[[m - 1, j]] = original.weight(w) * mean_len;
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::AllZeroMatrix);
    }

    let factors = nmf_multiplicative(&a, rank, iters, rng_seed);
    let reconstruction = factors.u.dot(&factors.v);
    let query_row = reconstruction.row(m - 1);
    let weights: BTreeMap<TermId, f64> = columns
        .iter()
        .zip(query_row.iter())
        .map(|(&t, &w)| (t, w.max(0.0)))
        .collect();
    Ok((QueryLm::from_weights(weights), factors))
}

/// Lee-Seung multiplicative updates for `A ~ U V` under the Frobenius
/// objective, from a seeded uniform random nonnegative start.
pub fn nmf_multiplicative(a: &Array2<f64>, rank: usize, iters: usize, rng_seed: u64) -> NmfFactors {
    const EPS: f64 = 1e-12;
    let (m, n) = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut u = Array2::from_shape_fn((m, rank), |_| rng.random::<f64>());
    let mut v = Array2::from_shape_fn((rank, n), |_| rng.random::<f64>());

    let mut residuals = Vec::with_capacity(iters);
    for _ in 0..iters {
        // V <- V * (U^T A) / (U^T U V)
        let numer = u.t().dot(a);
        let denom = u.t().dot(&u).dot(&v);
        ndarray::Zip::from(&mut v)
            .and(&numer)
            .and(&denom)
            .for_each(|x, &num, &den| *x *= num / (den + EPS));
        // U <- U * (A V^T) / (U V V^T)
        let numer = a.dot(&v.t());
        let denom = u.dot(&v).dot(&v.t());
        ndarray::Zip::from(&mut u)
            .and(&numer)
            .and(&denom)
            .for_each(|x, &num, &den| *x *= num / (den + EPS));

        let diff = a - &u.dot(&v);
        residuals.push(diff.mapv(|x| x * x).sum().sqrt());
    }
    NmfFactors { u, v, residuals }
}

/// Keep the `top_k` heaviest terms (ties broken by term string) and
/// renormalize.
pub fn truncate_terms(lm: &FeedbackLm, top_k: usize, index: &Index) -> FeedbackLm {
    assert!(top_k >= 1, "top_k must be at least 1");
    let ranked = lm.ranked_terms(index);
    FeedbackLm::new(
        QueryLm::from_weights(ranked.into_iter().take(top_k)),
        lm.method,
    )
}
