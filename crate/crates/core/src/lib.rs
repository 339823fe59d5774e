//! # toxprep
//!
//! Preprocessing and benchmarking toolkit for toxic-comment corpora.
//!
//! The crate covers the full path from a Jigsaw-format CSV to cross-validated
//! classifier metrics:
//!
//! - [`corpus`]: CSV ingestion, binary label collapse, vocabulary statistics.
//! - [`lexicons`]: word lists and replacement maps (blacklist, contractions,
//!   acronyms, stopwords, proper names, frequent words).
//! - [`textops`]: the reference tokenizer, atomic transforms and composite
//!   pipelines.
//! - [`fuzzy`]: Levenshtein kernel, BK-tree index, wildcard/leet blacklist
//!   matching and proper-name lookup.
//! - [`features`]: bag-of-n-grams vectorization and NB log-count ratios.
//! - [`models`]: logistic regression and NBSVM trained from scratch.
//! - [`eval`]: stratified k-fold CV, metrics and the pipeline × model grid.
//! - [`cli`]: the `toxprep` command implementations.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod fuzzy;
pub mod lexicons;
pub mod models;
pub mod synth;
pub mod textops;

pub use corpus::{load_corpus, word_frequencies, Document, FrequencyTable};
pub use error::{Error, Result};
pub use eval::{run_cell, run_grid, stratified_folds, FoldReport, MetricSet};
pub use features::{SparseVector, Vocabulary};
pub use fuzzy::{FuzzyIndex, MatchPolicy, ObfuscationMatcher};
pub use lexicons::{Lexicon, LexiconKind, LexiconSet};
pub use models::{LinearModel, ModelKind};
pub use textops::{apply_pipeline, apply_transform, PipelineSpec, Tokenizer, TransformSpec};
