//! `prf`: batch driver for language-model retrieval with pseudo-relevance
//! feedback. Subcommands: `index`, `run`, `sweep`, `eval`, `compare`,
//! `synth`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use prf_core::corpus::{self, DocFormat, TokenPipeline};
use prf_core::ecdmm::Similarity;
use prf_core::embeddings::EmbeddingFormat;
use prf_core::eval::{evaluate_run, RunFile};
use prf_core::experiment::{
    compare_runs, run_experiment, sweep, ExperimentConfig, Method, SweepParam,
};
use prf_core::index::Index;
use prf_core::synth::{generate, write_to_dir, SynthConfig};

#[derive(Parser)]
#[command(name = "prf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an inverted index and persist it (binary + vocabulary TSV).
    Index(IndexArgs),
    /// Run one retrieval + feedback experiment.
    Run(RunArgs),
    /// Run one experiment per value of a swept parameter.
    Sweep(SweepArgs),
    /// Score an existing run file against qrels.
    Eval(EvalArgs),
    /// Multi-run significance table (paired t-test on per-query AP).
    Compare(CompareArgs),
    /// Generate the synthetic benchmark corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Document collection.
    #[arg(long)]
    docs: PathBuf,
    /// Collection format.
    #[arg(long, value_enum, default_value = "jsonl")]
    format: CliDocFormat,
    /// Output index path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Stopword file, one term per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Apply the Porter stemmer.
    #[arg(long)]
    stem: bool,
    /// Keep the original character case.
    #[arg(long)]
    no_lowercase: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliDocFormat {
    Jsonl,
    TrecSgml,
}

impl From<CliDocFormat> for DocFormat {
    fn from(f: CliDocFormat) -> DocFormat {
        match f {
            CliDocFormat::Jsonl => DocFormat::Jsonl,
            CliDocFormat::TrecSgml => DocFormat::TrecSgml,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMethod {
    Mle,
    Rm3,
    Rm4,
    Mixture,
    Dmm,
    Medmm,
    Rfmf,
    Ecdmm,
}

impl From<CliMethod> for Method {
    fn from(m: CliMethod) -> Method {
        match m {
            CliMethod::Mle => Method::Mle,
            CliMethod::Rm3 => Method::Rm3,
            CliMethod::Rm4 => Method::Rm4,
            CliMethod::Mixture => Method::Mixture,
            CliMethod::Dmm => Method::Dmm,
            CliMethod::Medmm => Method::Medmm,
            CliMethod::Rfmf => Method::Rfmf,
            CliMethod::Ecdmm => Method::Ecdmm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSimilarity {
    Sigmoid,
    Cosine,
}

#[derive(Args)]
struct RunArgs {
    /// Declarative experiment file (TOML); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<CliDocFormat>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Embeddings file format: word2vec text (header) or GloVe text.
    #[arg(long, value_enum)]
    embeddings_format: Option<CliEmbeddingFormat>,
    /// Prebuilt index to load (or to build and cache).
    #[arg(long)]
    index: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, value_enum)]
    method: Option<CliMethod>,
    /// Interpolation coefficient toward the original query.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated alpha grid for 2-fold cross-validation.
    #[arg(long, value_delimiter = ',')]
    cv_grid: Option<Vec<f64>>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    fb_docs: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    expansion_terms: Option<usize>,
    #[arg(long)]
    n_pos: Option<usize>,
    #[arg(long)]
    n_neg: Option<usize>,
    #[arg(long, value_enum)]
    similarity: Option<CliSimilarity>,
    /// Use the plain (unweighted) softmax for the embedded feedback model.
    #[arg(long)]
    unweighted_softmax: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write top-10 expansion terms per topic.
    #[arg(long)]
    dump_expansions: bool,
    /// Write per-topic optimization traces (ECDMM).
    #[arg(long)]
    dump_traces: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliEmbeddingFormat {
    Word2vecText,
    GloveText,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept parameter.
    #[arg(long, value_enum)]
    param: CliSweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSweepParam {
    NPos,
    NNeg,
    AlphaInterp,
}

#[derive(Args)]
struct EvalArgs {
    /// TREC run file.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Also write per-query metrics as CSV.
    #[arg(long)]
    per_query: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    qrels: PathBuf,
    /// Two or more TREC run files.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for docs.jsonl, topics.tsv, qrels.txt, vectors.txt.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20_316)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    topics: usize,
    #[arg(long, default_value_t = 20)]
    docs_per_topic: usize,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Index(args) => cmd_index(args),
        Command::Run(args) => {
            let config = build_config(args)?;
            let out = run_experiment(&config).context("experiment failed")?;
            if let Some(eval) = &out.eval {
                println!(
                    "{}\tMAP {:.4}\tP@5 {:.4}\tP@10 {:.4}",
                    config.run_tag(),
                    eval.map,
                    eval.mean_p5,
                    eval.mean_p10
                );
            }
            if let Some(cv) = &out.cv {
                println!(
                    "cross-validated alpha: fold0 {} fold1 {}",
                    cv.fold_alphas[0], cv.fold_alphas[1]
                );
            }
            if !out.fallbacks.is_empty() {
                println!("{} topic(s) fell back to the unexpanded query", out.fallbacks.len());
            }
            if let Some(path) = &out.run_path {
                println!("run file: {}", path.display());
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let param = match args.param {
                CliSweepParam::NPos => SweepParam::NPos,
                CliSweepParam::NNeg => SweepParam::NNeg,
                CliSweepParam::AlphaInterp => SweepParam::AlphaInterp,
            };
            let values = args.values.clone();
            let config = build_config(args.run)?;
            let report = sweep(&config, param, &values).context("sweep failed")?;
            let mut text = Vec::new();
            report.write_csv(&mut text)?;
            print!("{}", String::from_utf8_lossy(&text));
            println!("sweep report: {}", config.output_dir.join("sweep.csv").display());
            Ok(())
        }
        Command::Eval(args) => {
            let run = RunFile::parse(&args.run)?;
            let qrels = corpus::parse_qrels(&args.qrels)?;
            let eval = evaluate_run(&run, &qrels);
            println!("tag\tMAP\tP@5\tP@10\ttopics");
            println!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}",
                run.tag,
                eval.map,
                eval.mean_p5,
                eval.mean_p10,
                eval.per_query.len()
            );
            if let Some(path) = args.per_query {
                let mut f = std::fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                eval.write_per_query_csv(&mut f)?;
            }
            Ok(())
        }
        Command::Compare(args) => {
            if args.runs.len() < 2 {
                bail!("compare needs at least two run files");
            }
            let qrels = corpus::parse_qrels(&args.qrels)?;
            let mut evals = Vec::new();
            for path in &args.runs {
                let run = RunFile::parse(path)?;
                let tag = if run.tag.is_empty() {
                    path.display().to_string()
                } else {
                    run.tag.clone()
                };
                evals.push((tag, evaluate_run(&run, &qrels)));
            }
            print!("{}", compare_runs(&evals)?);
            Ok(())
        }
        Command::Synth(args) => {
            let corpus = generate(&SynthConfig {
                seed: args.seed,
                n_topics: args.topics,
                docs_per_topic: args.docs_per_topic,
                ..Default::default()
            });
            let paths = write_to_dir(&corpus, &args.out)?;
            println!(
                "wrote {} docs, {} topics, {} judgments, {} vectors under {}",
                corpus.docs.len(),
                corpus.topics.len(),
                corpus.qrels.len(),
                corpus.embeddings.len(),
                args.out.display()
            );
            println!(
                "  {}\n  {}\n  {}\n  {}",
                paths.docs.display(),
                paths.topics.display(),
                paths.qrels.display(),
                paths.embeddings.display()
            );
            Ok(())
        }
    }
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let pipeline = pipeline_of(&args.pipeline)?;
    let docs = corpus::parse_documents(&args.docs, args.format.into())?;
    let index = Index::build(&docs, &pipeline)?;
    index.save(&args.out)?;
    println!(
        "indexed {} docs, {} terms, {} tokens -> {}",
        index.num_docs(),
        index.num_terms(),
        index.total_tokens(),
        args.out.display()
    );
    Ok(())
}

fn pipeline_of(args: &PipelineArgs) -> Result<TokenPipeline> {
    let stopwords = match &args.stopwords {
        Some(path) => corpus::load_stopwords(path)?,
        None => Default::default(),
    };
    Ok(TokenPipeline {
        lowercase: !args.no_lowercase,
        stopwords,
        stem: args.stem,
    })
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.docs {
        config.docs_path = v;
    }
    if let Some(v) = args.format {
        config.docs_format = v.into();
    }
    if let Some(v) = args.topics {
        config.topics_path = v;
    }
    if let Some(v) = args.qrels {
        config.qrels_path = Some(v);
    }
    if let Some(v) = args.embeddings {
        config.embeddings_path = Some(v);
    }
    if let Some(v) = args.embeddings_format {
        config.embeddings_format = match v {
            CliEmbeddingFormat::Word2vecText => EmbeddingFormat::Word2vecText,
            CliEmbeddingFormat::GloveText => EmbeddingFormat::GloveText,
        };
    }
    if let Some(v) = args.index {
        config.index_path = Some(v);
    }
    if let Some(v) = args.pipeline.stopwords {
        config.stopwords_path = Some(v);
    }
    if args.pipeline.stem {
        config.stem = true;
    }
    if args.pipeline.no_lowercase {
        config.lowercase = false;
    }
    if let Some(v) = args.method {
        config.method = v.into();
    }
    if let Some(v) = args.alpha {
        config.alpha_interp = v;
    }
    if let Some(v) = args.cv_grid {
        config.cv_grid = Some(v);
    }
    if let Some(v) = args.mu {
        config.mu = v;
    }
    if let Some(v) = args.fb_docs {
        config.fb_docs = v;
    }
    if let Some(v) = args.depth {
        config.depth = v;
    }
    if let Some(v) = args.expansion_terms {
        config.expansion_terms = v;
    }
    if let Some(v) = args.n_pos {
        config.ecdmm.n_pos = v;
    }
    if let Some(v) = args.n_neg {
        config.ecdmm.n_neg = v;
    }
    if let Some(v) = args.similarity {
        config.ecdmm.similarity = match v {
            CliSimilarity::Sigmoid => Similarity::Sigmoid,
            CliSimilarity::Cosine => Similarity::Cosine,
        };
    }
    if args.unweighted_softmax {
        config.ecdmm.weighted_softmax = false;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.tag {
        config.tag = v;
    }
    if let Some(v) = args.out {
        config.output_dir = v;
    }
    if args.dump_expansions {
        config.dump_expansions = true;
    }
    if args.dump_traces {
        config.dump_traces = true;
    }
    if config.docs_path.as_os_str().is_empty() && config.index_path.is_none() {
        bail!("either --docs/--config with docs_path or --index is required");
    }
    if config.topics_path.as_os_str().is_empty() {
        bail!("--topics (or topics_path in the config file) is required");
    }
    // PRF_CACHE_DIR overrides only where auto-built indexes are cached.
    if config.index_path.is_none() {
        if let Ok(cache_dir) = std::env::var("PRF_CACHE_DIR") {
            let mut hasher = DefaultHasher::new();
            config.docs_path.hash(&mut hasher);
            config.lowercase.hash(&mut hasher);
            config.stem.hash(&mut hasher);
            config.stopwords_path.hash(&mut hasher);
            let name = format!("{:016x}.idx", hasher.finish());
            config.index_path = Some(PathBuf::from(cache_dir).join(name));
        }
    }
    Ok(config)
}
