//! Language-model ad-hoc retrieval with the pseudo-relevance-feedback family:
//! relevance models (RM1-RM4), the EM mixture model, divergence minimization
//! (DMM, MEDMM), NMF-based query re-weighting (RFMF), and ECDMM, which learns a
//! query-specific projection matrix over word embeddings and rebuilds the query
//! language model from projected-vector similarities.
//!
//! The crate is organized as a small experiment laboratory:
//!
//! - [`corpus`]: collection/topic/qrels parsing and text normalization
//! - [`stem`]: the Porter stemmer
//! - [`index`]: immutable inverted index and unigram statistics
//! - [`retrieval`]: KL-divergence ranking with Dirichlet smoothing
//! - [`embeddings`]: word-vector tables and similarity primitives
//! - [`feedback`]: the classic feedback models
//! - [`ecdmm`]: projection-matrix learning and embedded feedback models
//! - [`eval`]: MAP / P@k, paired t-tests, cross-validation
//! - [`experiment`]: batch experiment driver and parameter sweeps
//! - [`synth`]: synthetic corpus + embedding generator for offline checks

pub mod corpus;
pub mod ecdmm;
pub mod embeddings;
mod error;
pub mod eval;
pub mod experiment;
pub mod feedback;
pub mod index;
pub mod retrieval;
pub mod stem;
pub mod synth;

pub use error::{Error, Result};
