//! Batch experiment driver: index building, first-pass retrieval, feedback
//! expansion, final retrieval, evaluation, and parameter sweeps.
//!
//! Topics are processed by a worker pool; all outputs are written in
//! topic-id order with per-topic seeds derived from the global seed, so runs
//! with identical configuration are byte-identical. A failing topic falls
//! back to its unexpanded ranked list and never aborts the batch.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, DocFormat, Qrels, TokenPipeline, Topic};
use crate::ecdmm::{self, EcdmmParams};
use crate::embeddings::{EmbeddingFormat, EmbeddingTable};
use crate::eval::{cross_validate_alpha, evaluate_run, CvResult, EvalResult, QueryEval, RunFile};
use crate::feedback::{self, FeedbackLm, FeedbackMethod};
use crate::index::{FeedbackSet, Index, TermId};
use crate::retrieval::{interpolate_query, mle_query, retrieve, QueryLm, ScoredList};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Rm3,
    Rm4,
    Mixture,
    Dmm,
    Medmm,
    Rfmf,
    Ecdmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Rm3 => "rm3",
            Method::Rm4 => "rm4",
            Method::Mixture => "mixture",
            Method::Dmm => "dmm",
            Method::Medmm => "medmm",
            Method::Rfmf => "rfmf",
            Method::Ecdmm => "ecdmm",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub docs_path: PathBuf,
    pub docs_format: DocFormat,
    pub topics_path: PathBuf,
    pub qrels_path: Option<PathBuf>,
    pub stopwords_path: Option<PathBuf>,
    pub embeddings_path: Option<PathBuf>,
    pub embeddings_format: EmbeddingFormat,
    /// Load the index from this file instead of rebuilding from documents.
    pub index_path: Option<PathBuf>,

    pub lowercase: bool,
    pub stem: bool,

    /// Dirichlet smoothing parameter.
    pub mu: f64,
    /// Number of blind-relevant feedback documents |F|.
    pub fb_docs: usize,
    /// Final retrieval depth.
    pub depth: usize,

    pub method: Method,
    /// Fixed interpolation coefficient (Eq. 3 endpoint semantics: 1 keeps
    /// only the original query). Ignored when `cv_grid` is set.
    pub alpha_interp: f64,
    /// When present, 2-fold cross-validation picks alpha from this grid.
    pub cv_grid: Option<Vec<f64>>,
    /// Feedback models are truncated to this many terms before
    /// interpolation.
    pub expansion_terms: usize,

    pub ecdmm: EcdmmParams,
    pub mixture_lambda: f64,
    pub mixture_tol: f64,
    pub mixture_max_iter: usize,
    pub dmm_lambda: f64,
    pub medmm_lambda: f64,
    pub medmm_beta: f64,
    pub rfmf_rank: usize,
    pub rfmf_iters: usize,

    pub seed: u64,
    pub tag: String,
    pub output_dir: PathBuf,
    pub dump_expansions: bool,
    pub dump_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            docs_path: PathBuf::new(),
            docs_format: DocFormat::Jsonl,
            topics_path: PathBuf::new(),
            qrels_path: None,
            stopwords_path: None,
            embeddings_path: None,
            embeddings_format: EmbeddingFormat::Word2vecText,
            index_path: None,
            lowercase: true,
            stem: false,
            mu: 1000.0,
            fb_docs: 10,
            depth: 1000,
            method: Method::Mle,
            alpha_interp: 0.5,
            cv_grid: None,
            expansion_terms: 50,
            ecdmm: EcdmmParams::default(),
            mixture_lambda: 0.5,
            mixture_tol: 1e-6,
            mixture_max_iter: 100,
            dmm_lambda: 0.5,
            medmm_lambda: 0.5,
            medmm_beta: 0.5,
            rfmf_rank: 3,
            rfmf_iters: 200,
            seed: 42,
            tag: String::new(),
            output_dir: PathBuf::from("out"),
            dump_expansions: false,
            dump_traces: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<ExperimentConfig> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn run_tag(&self) -> String {
        if self.tag.is_empty() {
            self.method.name().to_string()
        } else {
            self.tag.clone()
        }
    }
}

/// Per-topic first-pass state, computed once per context.
#[derive(Debug, Clone)]
struct TopicPrep {
    query_lm: QueryLm,
    query_term_ids: Vec<TermId>,
    feedback: FeedbackSet,
}

/// Loaded corpus state shared by every run of an experiment or sweep:
/// index, normalized embeddings, topics, qrels, and the per-topic feedback
/// sets from first-pass retrieval.
pub struct ExperimentContext {
    pub index: Index,
    pub pipeline: TokenPipeline,
    pub embeddings: Option<EmbeddingTable>,
    pub topics: Vec<Topic>,
    pub qrels: Option<Qrels>,
    mu: f64,
    fb_docs: usize,
    prep: BTreeMap<String, std::result::Result<TopicPrep, String>>,
    first_pass_builds: AtomicUsize,
}

impl ExperimentContext {
    /// Load all inputs and run first-pass retrieval for every topic.
    pub fn load(config: &ExperimentConfig) -> Result<ExperimentContext> {
        let stopwords = match &config.stopwords_path {
            Some(path) => corpus::load_stopwords(path)?,
            None => Default::default(),
        };
        let pipeline = TokenPipeline {
            lowercase: config.lowercase,
            stopwords,
            stem: config.stem,
        };
        let index = match &config.index_path {
            Some(path) if path.exists() => Index::load(path)?,
            _ => {
                let docs = corpus::parse_documents(&config.docs_path, config.docs_format)?;
                let index = Index::build(&docs, &pipeline)?;
                if let Some(path) = &config.index_path {
                    index.save(path)?;
                }
                index
            }
        };
        let embeddings = match &config.embeddings_path {
            Some(path) => Some(
                EmbeddingTable::load(path, config.embeddings_format)?
                    .normalized(config.lowercase, config.stem),
            ),
            None => None,
        };
        let topics = corpus::parse_topics(&config.topics_path)?;
        let qrels = match &config.qrels_path {
            Some(path) => Some(corpus::parse_qrels(path)?),
            None => None,
        };

        let mut ctx = ExperimentContext {
            index,
            pipeline,
            embeddings,
            topics,
            qrels,
            mu: config.mu,
            fb_docs: config.fb_docs,
            prep: BTreeMap::new(),
            first_pass_builds: AtomicUsize::new(0),
        };
        ctx.build_first_pass();
        Ok(ctx)
    }

    /// First-pass retrieval with the MLE query: the |F| feedback documents
    /// for every topic. Shared by all methods and sweep values.
    fn build_first_pass(&mut self) {
        self.first_pass_builds.fetch_add(1, Ordering::Relaxed);
        log::info!(
            "first-pass retrieval: {} topics, |F| = {}",
            self.topics.len(),
            self.fb_docs
        );
        let prepped: Vec<(String, std::result::Result<TopicPrep, String>)> = self
            .topics
            .par_iter()
            .map(|topic| {
                let result = self.prep_topic(topic);
                (topic.topic_id.clone(), result.map_err(|e| e.to_string()))
            })
            .collect();
        self.prep = prepped.into_iter().collect();
    }

    fn prep_topic(&self, topic: &Topic) -> Result<TopicPrep> {
        let tokens = corpus::tokenize(&topic.title, &self.pipeline);
        let query_lm = mle_query(&self.index, &topic.topic_id, &tokens)?;
        let query_term_ids: Vec<TermId> = tokens
            .iter()
            .filter_map(|t| self.index.term_id(t))
            .collect();
        let first_pass = retrieve(&self.index, &query_lm, &topic.topic_id, self.fb_docs, self.mu)?;
        let feedback = self.index.feedback_counts(&first_pass.doc_ords())?;
        Ok(TopicPrep {
            query_lm,
            query_term_ids,
            feedback,
        })
    }

    pub fn first_pass_builds(&self) -> usize {
        self.first_pass_builds.load(Ordering::Relaxed)
    }

    pub fn topic_ids(&self) -> Vec<String> {
        self.topics.iter().map(|t| t.topic_id.clone()).collect()
    }
}

fn topic_seed(seed: u64, topic_id: &str) -> u64 {
    // FNV-1a over the topic id, mixed with the global seed.
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in topic_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Artifacts of one topic's expansion, kept for report files.
struct TopicOutcome {
    ranked: ScoredList,
    expanded_lm: Option<QueryLm>,
    trace: Option<Vec<(usize, f64, f64)>>,
    fallback: Option<String>,
}

/// One run: per-topic ranked lists (plus expansion artifacts) for a fixed
/// method and interpolation coefficient.
fn run_topics(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
    alpha: f64,
    subset: Option<&[String]>,
) -> Result<BTreeMap<String, TopicOutcome>> {
    let topics: Vec<&Topic> = match subset {
        Some(ids) => ctx
            .topics
            .iter()
            .filter(|t| ids.contains(&t.topic_id))
            .collect(),
        None => ctx.topics.iter().collect(),
    };
    let outcomes: Vec<(String, Result<TopicOutcome>)> = topics
        .par_iter()
        .map(|topic| {
            let outcome = run_topic(ctx, config, alpha, topic);
            (topic.topic_id.clone(), outcome)
        })
        .collect();
    let mut map = BTreeMap::new();
    for (id, outcome) in outcomes {
        map.insert(id, outcome?);
    }
    Ok(map)
}

fn run_topic(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
    alpha: f64,
    topic: &Topic,
) -> Result<TopicOutcome> {
    let prep = match &ctx.prep[&topic.topic_id] {
        Ok(prep) => prep,
        Err(message) => {
            // No query model: emit an empty ranked list so the topic still
            // scores (as zero) instead of silently dropping out.
            log::warn!("topic {}: {message}; emitting empty result", topic.topic_id);
            return Ok(TopicOutcome {
                ranked: ScoredList {
                    query_id: topic.topic_id.clone(),
                    entries: Vec::new(),
                },
                expanded_lm: None,
                trace: None,
                fallback: Some(message.clone()),
            });
        }
    };

    let mut trace = None;
    let expansion: Result<QueryLm> = match config.method {
        Method::Mle => Ok(prep.query_lm.clone()),
        _ => build_feedback_lm(ctx, config, topic, prep, &mut trace).and_then(|fb_lm| {
            let truncated = feedback::truncate_terms(&fb_lm, config.expansion_terms, &ctx.index);
            interpolate_query(truncated.lm(), &prep.query_lm, alpha)
        }),
    };

    let (final_lm, fallback) = match expansion {
        Ok(lm) => (lm, None),
        Err(e) => {
            log::warn!(
                "topic {}: {} expansion failed ({e}); falling back to the unexpanded query",
                topic.topic_id,
                config.method.name()
            );
            (prep.query_lm.clone(), Some(e.to_string()))
        }
    };
    let ranked = retrieve(&ctx.index, &final_lm, &topic.topic_id, config.depth, config.mu)?;
    Ok(TopicOutcome {
        ranked,
        expanded_lm: Some(final_lm),
        trace,
        fallback,
    })
}

fn build_feedback_lm(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
    topic: &Topic,
    prep: &TopicPrep,
    trace_out: &mut Option<Vec<(usize, f64, f64)>>,
) -> Result<FeedbackLm> {
    let index = &ctx.index;
    let fb = &prep.feedback;
    match config.method {
        Method::Mle => unreachable!("handled by caller"),
        Method::Rm3 => feedback::rm1(index, fb, &prep.query_term_ids, config.mu),
        Method::Rm4 => feedback::rm2(index, fb, &prep.query_term_ids, config.mu),
        Method::Mixture => feedback::mixture_em(
            index,
            fb,
            config.mixture_lambda,
            config.mixture_tol,
            config.mixture_max_iter,
        )
        .map(|(lm, _)| lm),
        Method::Dmm => feedback::dmm(index, fb, config.dmm_lambda, config.mu),
        Method::Medmm => feedback::medmm(index, fb, config.medmm_lambda, config.medmm_beta, config.mu),
        Method::Rfmf => {
            let seed = topic_seed(config.seed, &topic.topic_id);
            feedback::rfmf(
                index,
                fb,
                &prep.query_lm,
                config.rfmf_rank,
                config.rfmf_iters,
                seed,
            )
            .map(|(lm, _)| FeedbackLm::new(lm, FeedbackMethod::Rfmf))
        }
        Method::Ecdmm => {
            let table = ctx
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::Config("ecdmm requires embeddings_path".into()))?;
            let seed = topic_seed(config.seed, &topic.topic_id);
            let mut params = config.ecdmm.clone();
            params.rng_seed = seed.wrapping_add(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = ecdmm::build_samples(fb, index, table, &params, &mut rng)?;
            let query_terms: Vec<String> = prep
                .query_term_ids
                .iter()
                .map(|&t| index.term(t).to_string())
                .collect();
            let vq = crate::embeddings::query_vector(table, &query_terms)?;
            let projection = ecdmm::learn_projection(&vq, &samples, &params)?;
            if config.dump_traces {
                *trace_out = Some(
                    projection
                        .trace
                        .objective
                        .iter()
                        .zip(&projection.trace.step_norms)
                        .enumerate()
                        .map(|(i, (&obj, &step))| (i, obj, step))
                        .collect(),
                );
            }
            let vq_hat = ecdmm::project_query(&projection, &vq)?;
            ecdmm::ecdmm_feedback_lm(
                &vq_hat,
                fb,
                table,
                index,
                params.similarity,
                params.weighted_softmax,
            )
        }
    }
}

/// Full experiment output.
pub struct ExperimentOutput {
    pub run: RunFile,
    pub eval: Option<EvalResult>,
    pub cv: Option<CvResult>,
    /// Topics that fell back to the unexpanded query, with the reason.
    pub fallbacks: BTreeMap<String, String>,
    pub run_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

fn outcome_run_file(
    ctx: &ExperimentContext,
    tag: &str,
    outcomes: &BTreeMap<String, TopicOutcome>,
) -> RunFile {
    let mut run = RunFile {
        tag: tag.to_string(),
        topics: BTreeMap::new(),
    };
    for (topic_id, outcome) in outcomes {
        let entries: Vec<(String, f64)> = outcome
            .ranked
            .entries
            .iter()
            .map(|&(d, s)| (ctx.index.doc_id(d).to_string(), s))
            .collect();
        run.topics.insert(topic_id.clone(), entries);
    }
    run
}

fn eval_of_run(ctx: &ExperimentContext, run: &RunFile) -> Option<EvalResult> {
    ctx.qrels.as_ref().map(|qrels| evaluate_run(run, qrels))
}

/// Run one configured experiment end to end, writing the run file, metric
/// report, per-query CSV, and optional expansion/trace dumps under
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ctx = ExperimentContext::load(config)?;
    run_with_context(&ctx, config)
}

/// As [`run_experiment`] but over a pre-loaded context (used by sweeps).
pub fn run_with_context(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
) -> Result<ExperimentOutput> {
    let tag = config.run_tag();

    let (outcomes, cv) = match (&config.cv_grid, ctx.qrels.as_ref()) {
        (Some(grid), Some(qrels)) => {
            let topic_ids = ctx.topic_ids();
            let cv = cross_validate_alpha(&topic_ids, grid, |alpha, subset| {
                let outcomes = run_topics(ctx, config, alpha, Some(subset))?;
                let run = outcome_run_file(ctx, &tag, &outcomes);
                Ok(evaluate_run(&run, qrels).per_query)
            })?;
            // Final ranked lists: each fold re-run with its selected alpha.
            let mut sorted = topic_ids.clone();
            sorted.sort();
            let folds: [Vec<String>; 2] = [
                sorted.iter().step_by(2).cloned().collect(),
                sorted.iter().skip(1).step_by(2).cloned().collect(),
            ];
            let mut outcomes = BTreeMap::new();
            for (fold, alpha) in folds.iter().zip(cv.fold_alphas) {
                outcomes.extend(run_topics(ctx, config, alpha, Some(fold))?);
            }
            (outcomes, Some(cv))
        }
        (Some(_), None) => {
            return Err(Error::Config(
                "cross-validation requires qrels_path".into(),
            ))
        }
        (None, _) => (run_topics(ctx, config, config.alpha_interp, None)?, None),
    };

    let run = outcome_run_file(ctx, &tag, &outcomes);
    let eval = eval_of_run(ctx, &run);
    let fallbacks: BTreeMap<String, String> = outcomes
        .iter()
        .filter_map(|(id, o)| o.fallback.clone().map(|f| (id.clone(), f)))
        .collect();

    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let run_path = config.output_dir.join(format!("{tag}.run"));
    let mut out = BufWriter::new(File::create(&run_path).map_err(|e| Error::io(&run_path, e))?);
    run.write(&mut out)?;
    out.flush().map_err(|e| Error::io(&run_path, e))?;

    let mut report_path = None;
    if let Some(eval) = &eval {
        let path = config.output_dir.join(format!("{tag}.eval.tsv"));
        let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(f, "tag\tMAP\tP@5\tP@10").map_err(|e| Error::io(&path, e))?;
        writeln!(
            f,
            "{tag}\t{:.4}\t{:.4}\t{:.4}",
            eval.map, eval.mean_p5, eval.mean_p10
        )
        .map_err(|e| Error::io(&path, e))?;
        let per_query_path = config.output_dir.join(format!("{tag}.per_query.csv"));
        let mut f =
            File::create(&per_query_path).map_err(|e| Error::io(&per_query_path, e))?;
        eval.write_per_query_csv(&mut f)?;
        report_path = Some(path);
    }

    if config.dump_expansions {
        let dir = config.output_dir.join("expansions");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (topic_id, outcome) in &outcomes {
            if let Some(lm) = &outcome.expanded_lm {
                let path = dir.join(format!("{tag}.{topic_id}.tsv"));
                let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
                let as_fb = FeedbackLm::new(lm.clone(), FeedbackMethod::Ecdmm);
                for (term, weight) in as_fb.ranked_terms(&ctx.index).into_iter().take(10) {
                    writeln!(f, "{}\t{:.4}", ctx.index.term(term), weight)
                        .map_err(|e| Error::io(&path, e))?;
                }
            }
        }
    }

    if config.dump_traces {
        let dir = config.output_dir.join("traces");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (topic_id, outcome) in &outcomes {
            if let Some(trace) = &outcome.trace {
                let path = dir.join(format!("{tag}.{topic_id}.csv"));
                let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
                writeln!(f, "iteration,objective,step_norm").map_err(|e| Error::io(&path, e))?;
                for &(i, obj, step) in trace {
                    writeln!(f, "{i},{obj},{step}").map_err(|e| Error::io(&path, e))?;
                }
            }
        }
    }

    Ok(ExperimentOutput {
        run,
        eval,
        cv,
        fallbacks,
        run_path: Some(run_path),
        report_path,
    })
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NPos,
    NNeg,
    AlphaInterp,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub result: std::result::Result<(f64, f64, f64), String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "value,map,p5,p10,error").map_err(|e| Error::io("<sweep csv>", e))?;
        for row in &self.rows {
            match &row.result {
                Ok((map, p5, p10)) => writeln!(out, "{},{map},{p5},{p10},", row.value),
                Err(e) => writeln!(out, "{},,,,{e}", row.value),
            }
            .map_err(|e| Error::io("<sweep csv>", e))?;
        }
        Ok(())
    }
}

/// One full experiment per value, sharing the loaded context (index,
/// embeddings, and first-pass feedback sets are computed once). Failures
/// become error rows instead of aborting the sweep.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let ctx = ExperimentContext::load(config)?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut run_config = config.clone();
        run_config.output_dir = config.output_dir.join(format!(
            "{}_{}",
            match param {
                SweepParam::NPos => "n_pos",
                SweepParam::NNeg => "n_neg",
                SweepParam::AlphaInterp => "alpha_interp",
            },
            value
        ));
        match param {
            SweepParam::NPos => run_config.ecdmm.n_pos = value as usize,
            SweepParam::NNeg => run_config.ecdmm.n_neg = value as usize,
            SweepParam::AlphaInterp => run_config.alpha_interp = value,
        }
        let result = match run_with_context(&ctx, &run_config) {
            Ok(output) => match output.eval {
                Some(eval) => Ok((eval.map, eval.mean_p5, eval.mean_p10)),
                None => Err("no qrels: nothing to evaluate".to_string()),
            },
            Err(e) => Err(e.to_string()),
        };
        if let Err(e) = &result {
            log::warn!("sweep value {value}: {e}");
        }
        rows.push(SweepRow { value, result });
    }
    debug_assert_eq!(ctx.first_pass_builds(), 1);
    let report = SweepReport { param, rows };
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let path = config.output_dir.join("sweep.csv");
    let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    report.write_csv(&mut f)?;
    Ok(report)
}

/// Significance table across runs: pairwise two-tailed paired t-tests on
/// per-query AP against every other run.
pub fn compare_runs(runs: &[(String, EvalResult)]) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(&mut out, "tag\tMAP\tP@5\tP@10\tsignificant_over(p<=0.05)").ok();
    // Topics common to all runs, in sorted order.
    let mut topics: Vec<String> = match runs.first() {
        Some((_, eval)) => eval.per_query.keys().cloned().collect(),
        None => return Err(Error::Config("no runs to compare".into())),
    };
    topics.retain(|t| runs.iter().all(|(_, e)| e.per_query.contains_key(t)));
    for (tag, eval) in runs {
        let mut beats = Vec::new();
        for (other_tag, other) in runs {
            if tag == other_tag {
                continue;
            }
            let a = eval.ap_vector_for(&topics);
            let b = other.ap_vector_for(&topics);
            let mean_a: f64 = a.iter().sum::<f64>() / a.len().max(1) as f64;
            let mean_b: f64 = b.iter().sum::<f64>() / b.len().max(1) as f64;
            if mean_a > mean_b && paired_t(&a, &b)? <= 0.05 {
                beats.push(other_tag.clone());
            }
        }
        writeln!(
            &mut out,
            "{tag}\t{:.4}\t{:.4}\t{:.4}\t{}",
            eval.map,
            eval.mean_p5,
            eval.mean_p10,
            if beats.is_empty() {
                "-".to_string()
            } else {
                beats.join(",")
            }
        )
        .ok();
    }
    Ok(out)
}

fn paired_t(a: &[f64], b: &[f64]) -> Result<f64> {
    crate::eval::paired_t_test(a, b)
}

/// Convenience for tests and the synthetic pipeline: evaluate per-query
/// metrics of an in-memory run.
pub fn per_query_of(run: &RunFile, qrels: &Qrels) -> BTreeMap<String, QueryEval> {
    evaluate_run(run, qrels).per_query
}
