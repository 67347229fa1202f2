//! Embedded coefficient divergence minimization (ECDMM).
//!
//! For each query: draw positive and negative term samples from the feedback
//! documents, learn a query-specific n x n coefficient matrix `W` by gradient
//! descent so that `W^T v_q` moves toward positive sample vectors and away
//! from negative ones, project the averaged query vector, and rebuild the
//! feedback language model from a (optionally count-weighted) softmax over
//! similarities between the projected vector and the feedback terms.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine_sim, sigmoid_sim, EmbeddingTable, QueryVector};
use crate::feedback::{FeedbackLm, FeedbackMethod};
use crate::index::{FeedbackSet, Index, TermId};
use crate::retrieval::QueryLm;
use crate::{Error, Result};

/// Similarity function between the projected query vector and a term vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Sigmoid,
    Cosine,
}

/// Which distribution negative samples are drawn from: the feedback-set
/// unigram model (the surrounding text's reading) or the collection model
/// restricted to the feedback vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeSource {
    #[default]
    FeedbackModel,
    CollectionModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EcdmmParams {
    /// Weight of the positive-sample attraction term.
    pub alpha_pos: f64,
    /// Weight of the negative-sample repulsion term.
    pub lambda_neg: f64,
    /// Regularization constant.
    pub beta: f64,
    /// Number of positive samples to draw.
    pub n_pos: usize,
    /// Number of negative samples to draw.
    pub n_neg: usize,
    /// Mixture penalty on common collection terms in positive sampling.
    pub lambda_mix: f64,
    /// Initial learning rate.
    pub eta0: f64,
    /// Per-iteration learning-rate decay: eta_t = eta0 / (1 + eta_decay * t).
    pub eta_decay: f64,
    pub max_iter: usize,
    /// Stop when the Frobenius norm of the update falls below this.
    pub conv_tol: f64,
    pub rng_seed: u64,
    pub neg_source: NegativeSource,
    pub similarity: Similarity,
    /// Scale softmax terms by their feedback-set frequency c(w,F).
    pub weighted_softmax: bool,
}

impl Default for EcdmmParams {
    fn default() -> Self {
        EcdmmParams {
            alpha_pos: 0.8,
            lambda_neg: 0.05,
            beta: 0.01,
            n_pos: 40,
            n_neg: 100,
            lambda_mix: 0.9,
            eta0: 0.01,
            eta_decay: 0.01,
            max_iter: 1000,
            conv_tol: 1e-6,
            rng_seed: 0,
            neg_source: NegativeSource::FeedbackModel,
            similarity: Similarity::Cosine,
            weighted_softmax: true,
        }
    }
}

impl EcdmmParams {
    pub fn validate(&self) -> Result<()> {
        let invalid = |name: &'static str, value: f64, range: &'static str| {
            Err(Error::InvalidParameter { name, value, range })
        };
        if self.alpha_pos < 0.0 {
            return invalid("alpha_pos", self.alpha_pos, "[0, inf)");
        }
        if self.lambda_neg < 0.0 {
            return invalid("lambda_neg", self.lambda_neg, "[0, inf)");
        }
        if self.beta < 0.0 {
            return invalid("beta", self.beta, "[0, inf)");
        }
        if self.n_pos < 1 {
            return invalid("n_pos", self.n_pos as f64, "[1, inf)");
        }
        if self.n_neg < 1 {
            return invalid("n_neg", self.n_neg as f64, "[1, inf)");
        }
        if !(0.0..1.0).contains(&self.lambda_mix) {
            return invalid("lambda_mix", self.lambda_mix, "[0, 1)");
        }
        if self.max_iter < 1 {
            return invalid("max_iter", self.max_iter as f64, "[1, inf)");
        }
        Ok(())
    }
}

/// Positive and negative sample terms with their embedding vectors.
#[derive(Debug, Clone, Default)]
pub struct SampleSets {
    pub positives: Vec<(TermId, Vec<f64>)>,
    pub negatives: Vec<(TermId, Vec<f64>)>,
}

/// Learned coefficient matrix plus the optimization trace.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    pub w: Array2<f64>,
    pub trace: LearnTrace,
}

#[derive(Debug, Clone, Default)]
pub struct LearnTrace {
    /// Objective value at the start of each iteration.
    pub objective: Vec<f64>,
    /// Frobenius norm of each applied update.
    pub step_norms: Vec<f64>,
    pub converged: bool,
}

/// Positive-sampling distribution over the feedback vocabulary:
/// `w ~ (1-lambda) p_ml(w|F) / ((1-lambda) p_ml(w|F) + lambda p(w|C))`,
/// normalized.
pub fn positive_weights(fb: &FeedbackSet, index: &Index, lambda_mix: f64) -> Vec<(TermId, f64)> {
    let raw: Vec<(TermId, f64)> = fb
        .terms()
        .map(|w| {
            let top = (1.0 - lambda_mix) * fb.p_ml(w);
            (w, top / (top + lambda_mix * index.p_collection(w)))
        })
        .collect();
    normalize_weights(raw)
}

/// Negative-sampling distribution: the chosen unigram model raised to 3/4,
/// normalized. The power flattens the distribution, boosting rarer terms.
pub fn negative_weights(
    fb: &FeedbackSet,
    index: &Index,
    source: NegativeSource,
) -> Vec<(TermId, f64)> {
    let raw: Vec<(TermId, f64)> = match source {
        NegativeSource::FeedbackModel => {
            fb.terms().map(|w| (w, fb.p_ml(w).powf(0.75))).collect()
        }
        NegativeSource::CollectionModel => {
            let total: f64 = fb.terms().map(|w| index.p_collection(w)).sum();
            fb.terms()
                .map(|w| (w, (index.p_collection(w) / total).powf(0.75)))
                .collect()
        }
    };
    normalize_weights(raw)
}

fn normalize_weights(mut weights: Vec<(TermId, f64)>) -> Vec<(TermId, f64)> {
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    if total > 0.0 {
        for (_, w) in &mut weights {
            *w /= total;
        }
    }
    weights
}

/// Weighted sampling without replacement: up to `n` distinct terms.
fn draw_without_replacement(
    weights: &[(TermId, f64)],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TermId>> {
    let mut pool: Vec<(TermId, f64)> =
        weights.iter().filter(|&&(_, w)| w > 0.0).copied().collect();
    if pool.is_empty() {
        return Err(Error::EmptySampleSupport);
    }
    let mut drawn = Vec::with_capacity(n.min(pool.len()));
    while drawn.len() < n && !pool.is_empty() {
        let dist =
            WeightedIndex::new(pool.iter().map(|&(_, w)| w)).expect("pool weights are positive");
        let i = dist.sample(rng);
        drawn.push(pool.swap_remove(i).0);
    }
    Ok(drawn)
}

pub fn sample_positive(
    fb: &FeedbackSet,
    index: &Index,
    params: &EcdmmParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TermId>> {
    draw_without_replacement(
        &positive_weights(fb, index, params.lambda_mix),
        params.n_pos,
        rng,
    )
}

pub fn sample_negative(
    fb: &FeedbackSet,
    index: &Index,
    params: &EcdmmParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TermId>> {
    draw_without_replacement(
        &negative_weights(fb, index, params.neg_source),
        params.n_neg,
        rng,
    )
}

/// Draw both sample sets and attach embedding vectors. Sampled terms without
/// a vector are dropped (logged); positives and negatives may overlap.
pub fn build_samples(
    fb: &FeedbackSet,
    index: &Index,
    table: &EmbeddingTable,
    params: &EcdmmParams,
    rng: &mut ChaCha8Rng,
) -> Result<SampleSets> {
    let attach = |terms: Vec<TermId>, kind: &str| -> Vec<(TermId, Vec<f64>)> {
        let mut out = Vec::with_capacity(terms.len());
        let mut missing = 0usize;
        for t in terms {
            match table.get(index.term(t)) {
                Some(v) => out.push((t, v.to_vec())),
                None => missing += 1,
            }
        }
        if missing > 0 {
            log::debug!("{missing} {kind} sample(s) lack embedding vectors, dropped");
        }
        out
    };
    let positives = attach(sample_positive(fb, index, params, rng)?, "positive");
    let negatives = attach(sample_negative(fb, index, params, rng)?, "negative");
    let overlap = negatives
        .iter()
        .filter(|(t, _)| positives.iter().any(|(p, _)| p == t))
        .count();
    if overlap > 0 {
        log::debug!("{overlap} term(s) drawn as both positive and negative samples");
    }
    Ok(SampleSets {
        positives,
        negatives,
    })
}

fn check_dims(w: &Array2<f64>, vq: &[f64], samples: &SampleSets) -> Result<usize> {
    let n = vq.len();
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: w.nrows().max(w.ncols()),
            right: n,
        });
    }
    for (_, v) in samples.positives.iter().chain(&samples.negatives) {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                left: v.len(),
                right: n,
            });
        }
    }
    Ok(n)
}

/// Objective
/// `f(W) = sum_+ (alpha/2) |W^T v_q - v_w|^2 - sum_- (lambda/2) |W^T v_q - v_w|^2
///         - (beta/2) |W|_F^2`.
pub fn ecdmm_objective(
    w: &Array2<f64>,
    vq: &QueryVector,
    samples: &SampleSets,
    params: &EcdmmParams,
) -> Result<f64> {
    check_dims(w, &vq.values, samples)?;
    // W^T v_q is shared by every sample term.
    let projected = w.t().dot(&Array1::from(vq.values.clone()));
    let sq_dist = |target: &[f64]| -> f64 {
        projected
            .iter()
            .zip(target)
            .map(|(p, t)| (p - t) * (p - t))
            .sum()
    };
    let mut f = 0.0;
    for (_, v) in &samples.positives {
        f += 0.5 * params.alpha_pos * sq_dist(v);
    }
    for (_, v) in &samples.negatives {
        f -= 0.5 * params.lambda_neg * sq_dist(v);
    }
    f -= 0.5 * params.beta * w.iter().map(|x| x * x).sum::<f64>();
    Ok(f)
}

/// Gradient of [`ecdmm_objective`]:
/// `alpha sum_+ v_q (W^T v_q - v_w)^T - lambda sum_- v_q (W^T v_q - v_w)^T - beta W`,
/// the outer products oriented to match `W`'s layout.
pub fn ecdmm_gradient(
    w: &Array2<f64>,
    vq: &QueryVector,
    samples: &SampleSets,
    params: &EcdmmParams,
) -> Result<Array2<f64>> {
    let n = check_dims(w, &vq.values, samples)?;
    let vq_arr = Array1::from(vq.values.clone());
    let projected = w.t().dot(&vq_arr);
    // The per-sample outer products share the v_q factor, so accumulate the
    // weighted residuals first and take a single outer product.
    let mut combined = vec![0.0f64; n];
    for (_, v) in &samples.positives {
        for ((c, p), t) in combined.iter_mut().zip(&projected).zip(v) {
            *c += params.alpha_pos * (p - t);
        }
    }
    for (_, v) in &samples.negatives {
        for ((c, p), t) in combined.iter_mut().zip(&projected).zip(v) {
            *c -= params.lambda_neg * (p - t);
        }
    }
    let mut grad = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            grad[[i, j]] = vq_arr[i] * combined[j] - params.beta * w[[i, j]];
        }
    }
    Ok(grad)
}

/// Gradient descent on the objective from a seeded uniform random start in
/// [-1, 1], with step size `eta0 / (1 + eta_decay * t)`. Stops when the
/// applied update's Frobenius norm drops below `conv_tol` or after
/// `max_iter` iterations.
pub fn learn_projection(
    vq: &QueryVector,
    samples: &SampleSets,
    params: &EcdmmParams,
) -> Result<ProjectionMatrix> {
    params.validate()?;
    let n = vq.values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut w = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..=1.0));
    let mut trace = LearnTrace::default();

    for t in 0..params.max_iter {
        let objective = ecdmm_objective(&w, vq, samples, params)?;
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration: t });
        }
        trace.objective.push(objective);
        let grad = ecdmm_gradient(&w, vq, samples, params)?;
        let eta = params.eta0 / (1.0 + params.eta_decay * t as f64);
        let step = grad.mapv(|g| eta * g);
        let step_norm = step.mapv(|x| x * x).sum().sqrt();
        w -= &step;
        trace.step_norms.push(step_norm);
        if step_norm < params.conv_tol {
            trace.converged = true;
            break;
        }
    }
    Ok(ProjectionMatrix { w, trace })
}

/// Project the query vector into the learned space: `v_q_hat = W^T v_q`.
pub fn project_query(projection: &ProjectionMatrix, vq: &QueryVector) -> Result<QueryVector> {
    if projection.w.ncols() != vq.values.len() || projection.w.nrows() != vq.values.len() {
        return Err(Error::DimensionMismatch {
            left: projection.w.nrows(),
            right: vq.values.len(),
        });
    }
    let v = Array1::from(vq.values.clone());
    Ok(QueryVector {
        values: projection.w.t().dot(&v).to_vec(),
        source_terms: vq.source_terms.clone(),
    })
}

/// Feedback language model from the projected query vector: a softmax over
/// similarities to the feedback terms' vectors, optionally scaled per term by
/// its feedback frequency `a_w = c(w,F)`.
pub fn ecdmm_feedback_lm(
    vq_hat: &QueryVector,
    fb: &FeedbackSet,
    table: &EmbeddingTable,
    index: &Index,
    sim: Similarity,
    weighted: bool,
) -> Result<FeedbackLm> {
    let mut log_weights: BTreeMap<TermId, f64> = BTreeMap::new();
    for w in fb.terms() {
        let Some(vector) = table.get(index.term(w)) else {
            continue;
        };
        let similarity = match sim {
            Similarity::Sigmoid => sigmoid_sim(&vq_hat.values, vector)?,
            Similarity::Cosine => cosine_sim(&vq_hat.values, vector)?,
        };
        let log_scale = if weighted {
            (fb.count(w) as f64).ln()
        } else {
            0.0
        };
        log_weights.insert(w, similarity + log_scale);
    }
    if log_weights.is_empty() {
        return Err(Error::NoCandidateVector);
    }
    // Shift by the max before exponentiation; softmax is shift-invariant.
    let max = log_weights
        .values()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lm = QueryLm::from_weights(
        log_weights
            .into_iter()
            .map(|(t, lw)| (t, (lw - max).exp())),
    );
    Ok(FeedbackLm::new(lm, FeedbackMethod::Ecdmm))
}
