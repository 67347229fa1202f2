//! Acceptance suite: one test per shipping criterion, each printing a
//! `[PASS]` line (run with `--nocapture` to see them). Oracles here are
//! written independently of the library code paths they check: plain nested
//! loops over raw token data, central finite differences, and frozen
//! reference fixtures.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use prf_core::corpus::{RawDocument, TokenPipeline};
use prf_core::ecdmm::{
    self, ecdmm_gradient, ecdmm_objective, learn_projection, project_query, EcdmmParams,
    SampleSets, Similarity,
};
use prf_core::embeddings::{EmbeddingTable, QueryVector};
use prf_core::eval::{average_precision, paired_t_test, precision_at_k};
use prf_core::experiment::{run_experiment, ExperimentConfig, Method};
use prf_core::feedback::{dmm, medmm, mixture_em, nmf_multiplicative, rfmf, rm1, rm2};
use prf_core::index::{Index, TermId};
use prf_core::retrieval::QueryLm;
use prf_core::stem::porter_stem;
use prf_core::synth::{generate, write_to_dir, SynthConfig};

const MU: f64 = 1000.0;

fn doc(id: &str, text: &str) -> RawDocument {
    RawDocument {
        doc_id: id.into(),
        text: text.into(),
    }
}

// ---------------------------------------------------------------------------
// Independent oracle: raw counts and the feedback formulas as plain loops.
// ---------------------------------------------------------------------------

/// Token-level corpus snapshot, independent of the `Index` machinery.
struct RawStats {
    docs: Vec<Vec<&'static str>>,
    terms: Vec<&'static str>,
    total_tokens: usize,
}

impl RawStats {
    fn new(docs: Vec<Vec<&'static str>>) -> RawStats {
        let mut terms: Vec<&'static str> = docs.iter().flatten().copied().collect();
        terms.sort_unstable();
        terms.dedup();
        let total_tokens = docs.iter().map(Vec::len).sum();
        RawStats {
            docs,
            terms,
            total_tokens,
        }
    }

    fn count(&self, term: &str, d: usize) -> f64 {
        self.docs[d].iter().filter(|&&t| t == term).count() as f64
    }

    fn coll_freq(&self, term: &str) -> f64 {
        (0..self.docs.len()).map(|d| self.count(term, d)).sum()
    }

    fn p_coll(&self, term: &str) -> f64 {
        self.coll_freq(term) / self.total_tokens as f64
    }

    fn smooth(&self, term: &str, d: usize, mu: f64) -> f64 {
        (self.count(term, d) + mu * self.p_coll(term)) / (self.docs[d].len() as f64 + mu)
    }

    /// Terms of the feedback documents in sorted order.
    fn fb_terms(&self, f_docs: &[usize]) -> Vec<&'static str> {
        let mut terms: Vec<&'static str> = self
            .terms
            .iter()
            .copied()
            .filter(|t| f_docs.iter().any(|&d| self.count(t, d) > 0.0))
            .collect();
        terms.sort_unstable();
        terms
    }
}

fn normalize(weights: Vec<(&'static str, f64)>) -> BTreeMap<&'static str, f64> {
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    weights.into_iter().map(|(t, w)| (t, w / total)).collect()
}

fn oracle_rm1(
    s: &RawStats,
    f_docs: &[usize],
    query: &[&str],
    mu: f64,
) -> BTreeMap<&'static str, f64> {
    let prior = 1.0 / f_docs.len() as f64;
    let mut weights = Vec::new();
    for w in s.fb_terms(f_docs) {
        let mut mass = 0.0;
        for &d in f_docs {
            let mut ql = 1.0;
            for q in query {
                ql *= s.smooth(q, d, mu);
            }
            mass += s.smooth(w, d, mu) * prior * ql;
        }
        weights.push((w, mass));
    }
    normalize(weights)
}

fn oracle_rm2(
    s: &RawStats,
    f_docs: &[usize],
    query: &[&str],
    mu: f64,
) -> BTreeMap<&'static str, f64> {
    let prior = 1.0 / f_docs.len() as f64;
    let mut weights = Vec::new();
    for w in s.fb_terms(f_docs) {
        let p_w = s.p_coll(w);
        let mut product = p_w;
        for q in query {
            let mut inner = 0.0;
            for &d in f_docs {
                inner += s.smooth(q, d, mu) * s.smooth(w, d, mu) * prior / p_w;
            }
            product *= inner;
        }
        weights.push((w, product));
    }
    normalize(weights)
}

fn oracle_dmm(s: &RawStats, f_docs: &[usize], lambda: f64, mu: f64) -> BTreeMap<&'static str, f64> {
    let inv = 1.0 / (1.0 - lambda);
    let nf = f_docs.len() as f64;
    let mut weights = Vec::new();
    for w in s.fb_terms(f_docs) {
        let mut log_geo = 0.0;
        for &d in f_docs {
            log_geo += s.smooth(w, d, mu).ln();
        }
        let value = (inv * log_geo / nf - lambda * inv * s.p_coll(w).ln()).exp();
        weights.push((w, value));
    }
    normalize(weights)
}

fn oracle_medmm(
    s: &RawStats,
    f_docs: &[usize],
    lambda: f64,
    beta: f64,
    mu: f64,
) -> BTreeMap<&'static str, f64> {
    let alpha_d = 1.0 / f_docs.len() as f64;
    let mut weights = Vec::new();
    for w in s.fb_terms(f_docs) {
        let mut cross = 0.0;
        for &d in f_docs {
            cross += alpha_d * s.smooth(w, d, mu).ln();
        }
        weights.push((w, ((cross - lambda * s.p_coll(w).ln()) / beta).exp()));
    }
    normalize(weights)
}

/// The 5-doc / 20-term fixture shared by the oracle criteria.
fn oracle_fixture() -> (RawStats, Vec<RawDocument>) {
    let texts: [&'static str; 5] = [
        "trade airbus subsidy airbus europe dispute",
        "airbus aircraft industry subsidy france",
        "trade dispute government subsidy tariff trade",
        "weather storm coast rain flood",
        "market economy growth trade bank inflation",
    ];
    let raw = RawStats::new(texts.iter().map(|t| t.split(' ').collect()).collect());
    assert_eq!(raw.terms.len(), 20);
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| doc(&format!("d{}", i + 1), t))
        .collect();
    (raw, docs)
}

#[test]
fn criterion_brute_force_oracle_equivalence() {
    let (raw, docs) = oracle_fixture();
    let index = Index::build(&docs, &TokenPipeline::default()).unwrap();
    let f_ords = [0u32, 1, 2];
    let fb = index.feedback_counts(&f_ords).unwrap();
    let query_strs = ["airbus", "subsidy"];
    let query_ids: Vec<TermId> = query_strs
        .iter()
        .map(|t| index.term_id(t).unwrap())
        .collect();

    let compare = |got: &QueryLm, want: &BTreeMap<&'static str, f64>, label: &str| {
        assert_eq!(got.len(), want.len(), "{label}: support size");
        for (&term, &weight) in want {
            let id = index.term_id(term).unwrap();
            let diff = (got.weight(id) - weight).abs();
            assert!(diff <= 1e-12, "{label}: {term} differs by {diff:e}");
        }
    };

    let got = rm1(&index, &fb, &query_ids, MU).unwrap();
    compare(got.lm(), &oracle_rm1(&raw, &[0, 1, 2], &query_strs, MU), "rm1");

    let got = rm2(&index, &fb, &query_ids, MU).unwrap();
    compare(got.lm(), &oracle_rm2(&raw, &[0, 1, 2], &query_strs, MU), "rm2");

    for lambda in [0.1, 0.5, 0.9] {
        let got = dmm(&index, &fb, lambda, MU).unwrap();
        compare(got.lm(), &oracle_dmm(&raw, &[0, 1, 2], lambda, MU), "dmm");

        for beta in [0.3, 1.0, 2.5] {
            let got = medmm(&index, &fb, lambda, beta, MU).unwrap();
            compare(
                got.lm(),
                &oracle_medmm(&raw, &[0, 1, 2], lambda, beta, MU),
                "medmm",
            );
        }

        // MEDMM with beta = 1 - lambda and uniform alpha_d reduces to DMM.
        let d = dmm(&index, &fb, lambda, MU).unwrap();
        let m = medmm(&index, &fb, lambda, 1.0 - lambda, MU).unwrap();
        for (t, w) in d.lm().iter() {
            assert!((m.weight(t) - w).abs() <= 1e-12, "medmm!=dmm at {t}");
        }
    }
    println!("[PASS] brute-force oracle equivalence: rm1/rm2/dmm/medmm within 1e-12");
}

// ---------------------------------------------------------------------------
// Gradient vs central finite differences.
// ---------------------------------------------------------------------------

#[test]
fn criterion_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_316);
    let n = 8;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let params = EcdmmParams {
            alpha_pos: rng.random_range(0.05..1.5),
            lambda_neg: rng.random_range(0.0..0.5),
            beta: rng.random_range(0.0..0.2),
            ..Default::default()
        };
        let vec_of = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let vq = QueryVector {
            values: vec_of(&mut rng),
            source_terms: vec!["q".into()],
        };
        let samples = SampleSets {
            positives: (0..3).map(|i| (i as TermId, vec_of(&mut rng))).collect(),
            negatives: (0..5)
                .map(|i| (100 + i as TermId, vec_of(&mut rng)))
                .collect(),
        };
        let mut w = Array2::zeros((n, n));
        for x in w.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let grad = ecdmm_gradient(&w, &vq, &samples, &params).unwrap();
        let h = 1e-6;
        for i in 0..n {
            for j in 0..n {
                let mut wp = w.clone();
                wp[[i, j]] += h;
                let mut wm = w.clone();
                wm[[i, j]] -= h;
                let fd = (ecdmm_objective(&wp, &vq, &samples, &params).unwrap()
                    - ecdmm_objective(&wm, &vq, &samples, &params).unwrap())
                    / (2.0 * h);
                let g = grad[[i, j]];
                // Entries are O(1); measure error relative to unit scale so
                // near-zero entries are not dominated by FD cancellation.
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1.0);
                worst = worst.max(rel);
            }
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst:e}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] gradient vs central finite differences: 20 instances, worst rel err {worst:.2e}, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// EM and NMF monotonicity.
// ---------------------------------------------------------------------------

fn random_corpus(rng: &mut ChaCha8Rng) -> (Index, Vec<u32>) {
    let n_docs = rng.random_range(4..10);
    let vocab_size = rng.random_range(8..25);
    let docs: Vec<RawDocument> = (0..n_docs)
        .map(|d| {
            let len = rng.random_range(5..40);
            let tokens: Vec<String> = (0..len)
                .map(|_| format!("w{}", rng.random_range(0..vocab_size)))
                .collect();
            doc(&format!("d{d}"), &tokens.join(" "))
        })
        .collect();
    let index = Index::build(&docs, &TokenPipeline::default()).unwrap();
    let n_fb = rng.random_range(2..=4.min(n_docs));
    let mut ords: Vec<u32> = (0..n_docs as u32).collect();
    ords.shuffle(rng);
    ords.truncate(n_fb);
    (index, ords)
}

#[test]
fn criterion_em_loglik_non_decreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for instance in 0..100 {
        let (index, ords) = random_corpus(&mut rng);
        let fb = index.feedback_counts(&ords).unwrap();
        let lambda = rng.random_range(0.05..0.95);
        let (_, trace) = mixture_em(&index, &fb, lambda, 1e-12, 60).unwrap();
        for (i, pair) in trace.loglik.windows(2).enumerate() {
            let slack = 1e-10 * (1.0 + pair[0].abs());
            assert!(
                pair[1] >= pair[0] - slack,
                "instance {instance}: loglik dropped at iteration {i}: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
    println!("[PASS] mixture EM log-likelihood non-decreasing on 100 seeded instances");
}

#[test]
fn criterion_nmf_monotone_and_rank1_recovery() {
    // Residual monotonicity over random rectangular instances.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (m, n) = (rng.random_range(3..8), rng.random_range(4..12));
        let a = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..5.0));
        let rank = rng.random_range(1..=3);
        let factors = nmf_multiplicative(&a, rank, 80, rng.random());
        for pair in factors.residuals.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9 * (1.0 + pair[0]));
        }
    }

    // Exact rank-1 nonnegative instance: near-exact recovery in 500 steps.
    let u = Array1::from(vec![0.5, 2.0, 1.5, 3.0, 0.25]);
    let v = Array1::from(vec![1.0, 0.1, 2.2, 0.0, 0.7, 1.9]);
    let mut a = Array2::zeros((5, 6));
    for i in 0..5 {
        for j in 0..6 {
            a[[i, j]] = u[i] * v[j];
        }
    }
    let factors = nmf_multiplicative(&a, 1, 500, 20_316);
    let err = (&a - &factors.u.dot(&factors.v))
        .mapv(|x| x * x)
        .sum()
        .sqrt();
    assert!(err <= 1e-6, "rank-1 Frobenius error {err:e}");
    println!("[PASS] NMF residuals non-increasing; rank-1 recovered to {err:.2e} <= 1e-6");
}

// ---------------------------------------------------------------------------
// Normalization across randomized configurations.
// ---------------------------------------------------------------------------

#[test]
fn criterion_feedback_models_normalize() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0usize;
    for round in 0..200 {
        let (index, ords) = random_corpus(&mut rng);
        let fb = index.feedback_counts(&ords).unwrap();
        let mu = rng.random_range(10.0..2000.0);
        let n_query = rng.random_range(1..4);
        let query: Vec<TermId> = (0..n_query)
            .map(|_| rng.random_range(0..index.num_terms() as TermId))
            .collect();
        let lambda = rng.random_range(0.05..0.95);
        let beta = rng.random_range(0.05..3.0);

        let mut sums: Vec<(&str, f64)> = Vec::new();
        if let Ok(lm) = rm1(&index, &fb, &query, mu) {
            sums.push(("rm1", lm.lm().sum()));
        }
        if let Ok(lm) = rm2(&index, &fb, &query, mu) {
            sums.push(("rm2", lm.lm().sum()));
        }
        let (lm, _) = mixture_em(&index, &fb, lambda, 1e-9, 50).unwrap();
        sums.push(("mixture", lm.lm().sum()));
        sums.push(("dmm", dmm(&index, &fb, lambda, mu).unwrap().lm().sum()));
        sums.push((
            "medmm",
            medmm(&index, &fb, lambda, beta, mu).unwrap().lm().sum(),
        ));
        let original = QueryLm::from_weights(query.iter().map(|&t| (t, 1.0)));
        if !original.is_empty() {
            let rank = rng.random_range(1..=2);
            let (lm, _) = rfmf(&index, &fb, &original, rank, 60, round as u64).unwrap();
            sums.push(("rfmf", lm.sum()));
        }
        // ECDMM softmax over a random embedding table covering the corpus.
        let dim = rng.random_range(3..8);
        let mut table = EmbeddingTable::new(dim);
        for t in 0..index.num_terms() {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            table.insert(index.term(t as TermId), v).unwrap();
        }
        let vq_hat = QueryVector {
            values: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            source_terms: vec!["q".into()],
        };
        let sim = if rng.random() {
            Similarity::Cosine
        } else {
            Similarity::Sigmoid
        };
        let lm =
            ecdmm::ecdmm_feedback_lm(&vq_hat, &fb, &table, &index, sim, rng.random()).unwrap();
        sums.push(("ecdmm", lm.lm().sum()));

        for (label, sum) in sums {
            assert!(
                (sum - 1.0).abs() <= 1e-9,
                "round {round}: {label} sums to {sum}"
            );
            checked += 1;
        }
    }
    println!("[PASS] normalization: {checked} feedback models over 200 random configurations sum to 1 +- 1e-9");
}

// ---------------------------------------------------------------------------
// Synthetic end-to-end directional checks.
// ---------------------------------------------------------------------------

fn synthetic_config(dir: &std::path::Path) -> ExperimentConfig {
    let corpus = generate(&SynthConfig::default());
    let paths = write_to_dir(&corpus, dir).unwrap();
    ExperimentConfig {
        docs_path: paths.docs,
        topics_path: paths.topics,
        qrels_path: Some(paths.qrels),
        embeddings_path: Some(paths.embeddings),
        output_dir: dir.join("out"),
        alpha_interp: 0.5,
        ..Default::default()
    }
}

#[test]
fn criterion_synthetic_directional_improvements() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let base = synthetic_config(dir.path());

    let map_of = |method: Method, name: &str| -> f64 {
        let config = ExperimentConfig {
            method,
            output_dir: dir.path().join(name),
            ..base.clone()
        };
        let out = run_experiment(&config).unwrap();
        assert!(out.fallbacks.is_empty(), "{name}: unexpected fallbacks");
        out.eval.unwrap().map
    };
    // Default ECDMM configuration: cosine similarity + weighted softmax,
    // alpha=0.8, lambda=0.05, beta=0.01, n+=40, n-=100.
    let defaults = EcdmmParams::default();
    assert_eq!(defaults.alpha_pos, 0.8);
    assert_eq!(defaults.lambda_neg, 0.05);
    assert_eq!(defaults.beta, 0.01);
    assert_eq!(defaults.n_pos, 40);
    assert_eq!(defaults.n_neg, 100);
    assert_eq!(defaults.similarity, Similarity::Cosine);
    assert!(defaults.weighted_softmax);

    let mle = map_of(Method::Mle, "mle");
    let rm3 = map_of(Method::Rm3, "rm3");
    let ecdmm = map_of(Method::Ecdmm, "ecdmm");

    assert!(
        ecdmm > mle,
        "ECDMM MAP {ecdmm:.4} not strictly above MLE {mle:.4}"
    );
    assert!(rm3 >= mle, "RM3 MAP {rm3:.4} below MLE {mle:.4}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] synthetic directional: MLE {mle:.4} < ECDMM {ecdmm:.4}, RM3 {rm3:.4} >= MLE ({elapsed:?})"
    );
}

#[test]
fn criterion_weighted_softmax_trend() {
    let dir = tempfile::tempdir().unwrap();
    let base = synthetic_config(dir.path());
    let map_of = |weighted: bool, name: &str| -> f64 {
        let mut config = ExperimentConfig {
            method: Method::Ecdmm,
            output_dir: dir.path().join(name),
            ..base.clone()
        };
        config.ecdmm.similarity = Similarity::Cosine;
        config.ecdmm.weighted_softmax = weighted;
        run_experiment(&config).unwrap().eval.unwrap().map
    };
    let weighted = map_of(true, "weighted");
    let unweighted = map_of(false, "unweighted");
    assert!(
        weighted >= unweighted,
        "weighted {weighted:.4} < unweighted {unweighted:.4}"
    );
    println!(
        "[PASS] weighted-softmax trend: cosine weighted {weighted:.4} >= unweighted {unweighted:.4}"
    );
}

// ---------------------------------------------------------------------------
// Positive-only analytic optimum.
// ---------------------------------------------------------------------------

#[test]
fn criterion_positive_only_analytic_optimum() {
    // With lambda_neg = 0 and beta = 0 the objective is a positive-only
    // quadratic whose optimum satisfies W^T v_q = mean of positive vectors.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    let n_pos = 6;
    let positives: Vec<(TermId, Vec<f64>)> = (0..n_pos)
        .map(|i| {
            (
                i as TermId,
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
        })
        .collect();
    let mut mean = vec![0.0f64; n];
    for (_, v) in &positives {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / n_pos as f64;
        }
    }
    let samples = SampleSets {
        positives,
        negatives: Vec::new(),
    };
    let vq = QueryVector {
        values: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        source_terms: vec!["q".into()],
    };
    let params = EcdmmParams {
        lambda_neg: 0.0,
        beta: 0.0,
        rng_seed: 17,
        eta0: 0.05,
        eta_decay: 0.001,
        max_iter: 3000,
        conv_tol: 1e-10,
        ..Default::default()
    };
    let learned = learn_projection(&vq, &samples, &params).unwrap();
    let vq_hat = project_query(&learned, &vq).unwrap();
    for (i, (got, want)) in vq_hat.values.iter().zip(&mean).enumerate() {
        assert!(
            (got - want).abs() <= 1e-3,
            "coordinate {i}: {got} vs {want}"
        );
    }
    println!("[PASS] positive-only optimum: projected query within 1e-3 of positive mean");
}

// ---------------------------------------------------------------------------
// Evaluation correctness: AP / P@k fixtures, t-test oracle, Porter fixture.
// ---------------------------------------------------------------------------

#[test]
fn criterion_eval_correctness() {
    let strs = |items: &[&str]| -> Vec<String> { items.iter().map(|s| s.to_string()).collect() };
    let set = |items: &[&str]| -> std::collections::HashSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    };

    // AP fixtures.
    assert_eq!(
        average_precision(&strs(&["d1"]), &set(&["d1"])).unwrap(),
        1.0
    );
    let ap = average_precision(&strs(&["r", "n", "r2"]), &set(&["r", "r2"])).unwrap();
    assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    assert_eq!(
        average_precision(&strs(&["n1", "n2"]), &set(&["r"])).unwrap(),
        0.0
    );

    // P@k fixtures.
    assert_eq!(
        precision_at_k(&strs(&["r1", "r2", "r3", "r4", "r5"]), &set(&["r1", "r2", "r3", "r4", "r5"]), 5),
        1.0
    );
    assert!(
        (precision_at_k(
            &strs(&["r1", "n", "r2", "n", "n", "n", "r3", "n", "n", "n"]),
            &set(&["r1", "r2", "r3"]),
            10
        ) - 0.3)
            .abs()
            < 1e-15
    );
    assert!((precision_at_k(&strs(&["r1", "n1"]), &set(&["r1"]), 5) - 0.2).abs() < 1e-15);

    // t-test oracle: diffs [1,2,3] -> p within 5e-4 of 0.0742.
    let p = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
    assert!((p - 0.0742).abs() <= 5e-4, "p = {p}");

    // Porter reference pairs: 0 mismatches allowed.
    let mut mismatches = 0usize;
    for &(word, want) in PORTER_REFERENCE {
        let got = porter_stem(word);
        if got != want {
            eprintln!("porter mismatch: {word} -> {got} (want {want})");
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0, "{mismatches} Porter mismatches");
    println!(
        "[PASS] eval correctness: AP/P@k fixtures exact, t-test p = {p:.4}, Porter {}-word reference clean",
        PORTER_REFERENCE.len()
    );
}

// ---------------------------------------------------------------------------
// Determinism: byte-identical artifacts.
// ---------------------------------------------------------------------------

#[test]
fn criterion_full_run_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let base = synthetic_config(dir.path());
    let mut artifacts: Vec<Vec<Vec<u8>>> = Vec::new();
    for round in 0..2 {
        let out_dir = dir.path().join(format!("round{round}"));
        let config = ExperimentConfig {
            method: Method::Ecdmm,
            output_dir: out_dir.clone(),
            dump_expansions: true,
            ..base.clone()
        };
        run_experiment(&config).unwrap();
        let mut files: Vec<std::path::PathBuf> = walk_files(&out_dir);
        files.sort();
        artifacts.push(
            files
                .iter()
                .map(|p| std::fs::read(p).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(artifacts[0].len(), artifacts[1].len());
    assert_eq!(artifacts[0], artifacts[1]);
    println!(
        "[PASS] determinism: {} artifact files byte-identical across two runs",
        artifacts[0].len()
    );
}

fn walk_files(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out
}

/// Reference Porter pairs: end-to-end hand-traced fixtures spanning every
/// algorithm step (including both departures and the short combining forms
/// the suffix rules produce), cross-checked against an independent
/// transcription of the reference implementation.
const PORTER_REFERENCE: &[(&str, &str)] = &[
    ("caresses", "caress"),
    ("ponies", "poni"),
    ("ties", "ti"),
    ("caress", "caress"),
    ("cats", "cat"),
    ("feed", "feed"),
    ("agreed", "agre"),
    ("plastered", "plaster"),
    ("bled", "bled"),
    ("motoring", "motor"),
    ("sing", "sing"),
    ("conflated", "conflat"),
    ("troubled", "troubl"),
    ("sized", "size"),
    ("hopping", "hop"),
    ("tanned", "tan"),
    ("falling", "fall"),
    ("hissing", "hiss"),
    ("fizzed", "fizz"),
    ("failing", "fail"),
    ("filing", "file"),
    ("happy", "happi"),
    ("sky", "sky"),
    ("relational", "relat"),
    ("conditional", "condit"),
    ("rational", "ration"),
    ("valenci", "valenc"),
    ("hesitanci", "hesit"),
    ("digitizer", "digit"),
    ("conformabli", "conform"),
    ("radicalli", "radic"),
    ("vileli", "vile"),
    ("analogousli", "analog"),
    ("vietnamization", "vietnam"),
    ("predication", "predic"),
    ("operator", "oper"),
    ("feudalism", "feudal"),
    ("decisiveness", "decis"),
    ("hopefulness", "hope"),
    ("callousness", "callous"),
    ("formaliti", "formal"),
    ("sensitiviti", "sensit"),
    ("sensibiliti", "sensibl"),
    ("archaeology", "archaeolog"),
    ("triplicate", "triplic"),
    ("formative", "form"),
    ("formalize", "formal"),
    ("electriciti", "electr"),
    ("electrical", "electr"),
    ("hopeful", "hope"),
    ("goodness", "good"),
    ("revival", "reviv"),
    ("allowance", "allow"),
    ("inference", "infer"),
    ("airliner", "airlin"),
    ("gyroscopic", "gyroscop"),
    ("adjustable", "adjust"),
    ("defensible", "defens"),
    ("irritant", "irrit"),
    ("replacement", "replac"),
    ("adjustment", "adjust"),
    ("dependent", "depend"),
    ("adoption", "adopt"),
    ("homologou", "homolog"),
    ("communism", "commun"),
    ("activate", "activ"),
    ("angulariti", "angular"),
    ("homologous", "homolog"),
    ("effective", "effect"),
    ("bowdlerize", "bowdler"),
    ("probate", "probat"),
    ("rate", "rate"),
    ("cease", "ceas"),
    ("controll", "control"),
    ("roll", "roll"),
    ("as", "as"),
    ("is", "is"),
    ("a", "a"),
    ("airbus", "airbu"),
    ("subsidy", "subsidi"),
    ("subsidies", "subsidi"),
    ("economic", "econom"),
    ("government", "govern"),
    ("industry", "industri"),
    ("aircraft", "aircraft"),
    ("european", "european"),
    ("consortium", "consortium"),
    ("manufacturer", "manufactur"),
    ("germany", "germani"),
    ("running", "run"),
    ("jumped", "jump"),
    ("connected", "connect"),
    ("connection", "connect"),
    ("connections", "connect"),
    ("retrieval", "retriev"),
    ("retrieved", "retriev"),
    ("queries", "queri"),
    ("query", "queri"),
    ("documents", "document"),
    ("ranking", "rank"),
    ("probabilistic", "probabilist"),
    ("feedback", "feedback"),
    ("expansion", "expans"),
    ("smoothing", "smooth"),
    ("weighted", "weight"),
    ("similarity", "similar"),
    ("matrices", "matric"),
    ("vectors", "vector"),
    ("learning", "learn"),
    ("iterations", "iter"),
];
