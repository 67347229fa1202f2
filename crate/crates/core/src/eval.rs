//! Run scoring (AP, P@k, MAP), paired significance testing, and 2-fold
//! cross-validation of the interpolation coefficient.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::Qrels;
use crate::{Error, Result};

/// Parsed or in-memory run: per-topic ranked (doc_id, score) lists.
#[derive(Debug, Clone, Default)]
pub struct RunFile {
    pub tag: String,
    pub topics: BTreeMap<String, Vec<(String, f64)>>,
}

impl RunFile {
    /// Parse a TREC run file (`topic Q0 docid rank score tag`).
    pub fn parse(path: &Path) -> Result<RunFile> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut run = RunFile::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::ParseLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected 6 columns, found {}", fields.len()),
                });
            }
            let score: f64 = fields[4].parse().map_err(|_| Error::ParseLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("bad score {:?}", fields[4]),
            })?;
            run.tag = fields[5].to_string();
            run.topics
                .entry(fields[0].to_string())
                .or_default()
                .push((fields[2].to_string(), score));
        }
        Ok(run)
    }

    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        for (topic, entries) in &self.topics {
            for (rank, (doc_id, score)) in entries.iter().enumerate() {
                writeln!(out, "{topic} Q0 {doc_id} {} {score:.6} {}", rank + 1, self.tag)
                    .map_err(|e| Error::io("<run output>", e))?;
            }
        }
        Ok(())
    }
}

/// Per-query metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryEval {
    pub ap: f64,
    pub p5: f64,
    pub p10: f64,
}

/// Per-query metrics plus their arithmetic means over evaluated topics.
#[derive(Debug, Clone, Default)]
pub struct EvalResult {
    pub per_query: BTreeMap<String, QueryEval>,
    /// Topics with no relevant documents, excluded from the means.
    pub skipped: Vec<String>,
    pub map: f64,
    pub mean_p5: f64,
    pub mean_p10: f64,
}

impl EvalResult {
    pub fn from_per_query(per_query: BTreeMap<String, QueryEval>, skipped: Vec<String>) -> Self {
        let n = per_query.len() as f64;
        let (mut map, mut p5, mut p10) = (0.0, 0.0, 0.0);
        for q in per_query.values() {
            map += q.ap;
            p5 += q.p5;
            p10 += q.p10;
        }
        if n > 0.0 {
            map /= n;
            p5 /= n;
            p10 /= n;
        }
        EvalResult {
            per_query,
            skipped,
            map,
            mean_p5: p5,
            mean_p10: p10,
        }
    }

    /// Per-query AP vector aligned with another result's topics (used by the
    /// significance test).
    pub fn ap_vector_for(&self, topics: &[String]) -> Vec<f64> {
        topics
            .iter()
            .map(|t| self.per_query.get(t).map_or(0.0, |q| q.ap))
            .collect()
    }

    pub fn write_per_query_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "topic,ap,p5,p10").map_err(|e| Error::io("<csv output>", e))?;
        for (topic, q) in &self.per_query {
            writeln!(out, "{topic},{},{},{}", q.ap, q.p5, q.p10)
                .map_err(|e| Error::io("<csv output>", e))?;
        }
        Ok(())
    }
}

/// Average precision of one ranked list. `None` when the relevant set is
/// empty (the topic is excluded from means, not scored 0).
pub fn average_precision(ranked: &[String], relevant: &HashSet<String>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, doc) in ranked.iter().enumerate() {
        if relevant.contains(doc) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Precision at cutoff `k`. The divisor is `k` even when fewer documents
/// were retrieved (trec_eval convention).
pub fn precision_at_k(ranked: &[String], relevant: &HashSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "cutoff must be at least 1");
    let hits = ranked
        .iter()
        .take(k)
        .filter(|d| relevant.contains(*d))
        .count();
    hits as f64 / k as f64
}

/// Score a run against qrels. Topics with no relevant documents are skipped.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels) -> EvalResult {
    let mut per_query = BTreeMap::new();
    let mut skipped = Vec::new();
    for (topic, entries) in &run.topics {
        let relevant = qrels.relevant_docs(topic);
        let ranked: Vec<String> = entries.iter().map(|(d, _)| d.clone()).collect();
        match average_precision(&ranked, &relevant) {
            Some(ap) => {
                per_query.insert(
                    topic.clone(),
                    QueryEval {
                        ap,
                        p5: precision_at_k(&ranked, &relevant, 5),
                        p10: precision_at_k(&ranked, &relevant, 10),
                    },
                );
            }
            None => {
                log::warn!("topic {topic}: no relevant documents in qrels, skipped");
                skipped.push(topic.clone());
            }
        }
    }
    EvalResult::from_per_query(per_query, skipped)
}

/// Two-tailed paired Student's t-test on per-query metric vectors.
///
/// Conventions: all-zero differences give p = 1; zero variance with a
/// nonzero mean gives p = 0.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "paired sample size",
            value: a.len() as f64,
            range: "[2, inf)",
        });
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var.sqrt() / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid dof");
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// Outcome of 2-fold cross-validation of the interpolation coefficient.
#[derive(Debug, Clone)]
pub struct CvResult {
    /// Alpha selected for each fold (trained on the opposite fold).
    pub fold_alphas: [f64; 2],
    /// Per-query results pooled over both test folds.
    pub pooled: EvalResult,
}

/// Split topics into two folds by position parity in sorted topic-id order,
/// select the grid alpha maximizing training-fold MAP (ties to the smaller
/// alpha), and evaluate each fold with the alpha chosen on the other.
///
/// `run` maps (alpha, topic subset) to per-query metrics.
pub fn cross_validate_alpha<F>(topic_ids: &[String], grid: &[f64], mut run: F) -> Result<CvResult>
where
    F: FnMut(f64, &[String]) -> Result<BTreeMap<String, QueryEval>>,
{
    if topic_ids.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "topics",
            value: topic_ids.len() as f64,
            range: "[2, inf)",
        });
    }
    if grid.is_empty() {
        return Err(Error::Config("empty alpha grid".into()));
    }
    let mut sorted = topic_ids.to_vec();
    sorted.sort();
    let folds: [Vec<String>; 2] = [
        sorted.iter().step_by(2).cloned().collect(),
        sorted.iter().skip(1).step_by(2).cloned().collect(),
    ];

    let mut fold_alphas = [0.0; 2];
    let mut pooled = BTreeMap::new();
    for test in 0..2 {
        let train = &folds[1 - test];
        let mut best = (f64::NEG_INFINITY, f64::INFINITY); // (map, alpha)
        for &alpha in grid {
            let evals = run(alpha, train)?;
            let map = if evals.is_empty() {
                0.0
            } else {
                evals.values().map(|q| q.ap).sum::<f64>() / evals.len() as f64
            };
            if map > best.0 || (map == best.0 && alpha < best.1) {
                best = (map, alpha);
            }
        }
        fold_alphas[test] = best.1;
        pooled.extend(run(best.1, &folds[test])?);
    }
    Ok(CvResult {
        fold_alphas,
        pooled: EvalResult::from_per_query(pooled, Vec::new()),
    })
}
