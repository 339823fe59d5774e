//! Stratified cross-validation, metrics and the pipeline x model grid.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{text_frequencies, Document};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, vectorize, SparseVector, Vocabulary};
use crate::fuzzy::{FuzzyIndex, ObfuscationMatcher};
use crate::lexicons::{build_frequent_words, LexiconSet};
use crate::models::{Hyper, LinearTrainer, ModelKind, Trainer};
use crate::textops::{
    apply_transform, serialize_pipelines, PipelineSpec, Registry, Tokenizer, TransformContext, TransformName, RAW,
};

/// Minimum count for corpus words that shield tokens from profane fuzzy
/// rewriting.
pub const GUARD_MIN_FREQUENCY: u64 = 100;

/// Derives an independent seed for the component called `name`.
pub fn sub_seed(seed: u64, name: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(name.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles each class with a seeded RNG, then deals negatives followed by
/// positives round-robin across folds. Continuing the deal across classes
/// keeps both per-class counts and total fold sizes within one of each other.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut position = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} members, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = position % k;
            position += 1;
        }
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    Ok(FoldAssignment { k, seed, fold_of })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub n: usize,
    pub accuracy: f64,
    pub f1_pos: f64,
    pub f1_neg: f64,
    pub logloss: f64,
    pub misclassified: usize,
    pub precision_neg: f64,
    pub recall_neg: f64,
    pub threshold: f64,
}

pub const LOGLOSS_CLAMP: f64 = 1e-15;

/// Ratio with the convention that a class which is neither present nor
/// predicted scores 1.
fn ratio(num: usize, den: usize, vacuous: bool) -> f64 {
    if den == 0 {
        if vacuous {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    ratio(2 * tp, 2 * tp + fp + fn_, true)
}

pub fn compute_metrics(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricSet> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    let mut loss = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        let pred = p >= threshold;
        match (pred, y == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
        let pc = p.clamp(LOGLOSS_CLAMP, 1.0 - LOGLOSS_CLAMP);
        loss -= if y == 1 { pc.ln() } else { (1.0 - pc).ln() };
    }
    let n = probs.len();
    let misclassified = fp + fn_;
    Ok(MetricSet {
        n,
        accuracy: 1.0 - misclassified as f64 / n as f64,
        f1_pos: f1(tp, fp, fn_),
        f1_neg: f1(tn, fn_, fp),
        logloss: loss / n as f64,
        misclassified,
        precision_neg: ratio(tn, tn + fn_, fp == 0),
        recall_neg: ratio(tn, tn + fp, true),
        threshold,
    })
}

impl MetricSet {
    /// Unweighted fold means, except `misclassified` and `n` which are summed.
    pub fn aggregate(folds: &[MetricSet]) -> Result<MetricSet> {
        if folds.is_empty() {
            return Err(Error::InvalidArgument("no folds to aggregate".into()));
        }
        let k = folds.len() as f64;
        let mean = |f: fn(&MetricSet) -> f64| folds.iter().map(f).sum::<f64>() / k;
        Ok(MetricSet {
            n: folds.iter().map(|m| m.n).sum(),
            accuracy: mean(|m| m.accuracy),
            f1_pos: mean(|m| m.f1_pos),
            f1_neg: mean(|m| m.f1_neg),
            logloss: mean(|m| m.logloss),
            misclassified: folds.iter().map(|m| m.misclassified).sum(),
            precision_neg: mean(|m| m.precision_neg),
            recall_neg: mean(|m| m.recall_neg),
            threshold: folds[0].threshold,
        })
    }

    /// Violations of the metric invariants, empty when all hold.
    pub fn check(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("f1_pos", self.f1_pos),
            ("f1_neg", self.f1_neg),
            ("precision_neg", self.precision_neg),
            ("recall_neg", self.recall_neg),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(self.logloss >= 0.0 && self.logloss.is_finite()) {
            bad.push(format!("logloss = {}", self.logloss));
        }
        if self.misclassified > self.n {
            bad.push(format!("misclassified {} > n {}", self.misclassified, self.n));
        }
        bad
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub pipeline: String,
    pub model: String,
    pub folds: Vec<MetricSet>,
    pub aggregate: MetricSet,
    /// Out-of-fold probability for every document, in corpus order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oof: Vec<f64>,
    /// Not serialized, so reports are byte-identical across reruns.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// A grid row condition: a registered pipeline or the untransformed baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub id: String,
    pub pipeline: Option<PipelineSpec>,
}

impl Condition {
    pub fn raw() -> Self {
        Condition {
            id: RAW.to_string(),
            pipeline: None,
        }
    }

    pub fn pipeline(p: PipelineSpec) -> Self {
        Condition {
            id: p.id.clone(),
            pipeline: Some(p),
        }
    }

    pub fn resolve(registry: &Registry, id: &str) -> Result<Self> {
        Ok(match registry.resolve(id)? {
            None => Condition::raw(),
            Some(p) => Condition::pipeline(p.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub seed: u64,
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    pub threshold: f64,
    pub hyper: Hyper,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 10,
            seed: 0,
            ngram_range: (1, 2),
            min_df: 2,
            threshold: 0.5,
            hyper: Hyper::default(),
        }
    }
}

impl EvalConfig {
    pub fn fold_seed(&self) -> u64 {
        sub_seed(self.seed, "folds")
    }

    pub fn shuffle_seed(&self) -> u64 {
        sub_seed(self.seed, "shuffle")
    }

    pub fn subsample_seed(&self) -> u64 {
        sub_seed(self.seed, "subsample")
    }

    pub fn trainer(&self, kind: ModelKind) -> LinearTrainer {
        LinearTrainer {
            kind,
            hyper: Hyper {
                seed: self.shuffle_seed(),
                ..self.hyper
            },
        }
    }
}

/// Applies `stages` to both splits, rebuilding corpus-derived resources from
/// the current training texts before each stage that needs them.
pub fn transform_split(
    train: &mut [String],
    test: &mut [String],
    pipeline: &PipelineSpec,
    lexicons: &Arc<LexiconSet>,
    tokenizer: &Tokenizer,
) -> Result<()> {
    let mut ctx = TransformContext::with_lexicons(Arc::clone(lexicons));
    for (index, stage) in pipeline.stages.iter().enumerate() {
        use TransformName::*;
        match stage.name {
            RemoveRareWords => ctx.set_frequencies(Arc::new(text_frequencies(train, tokenizer))),
            CommonFuzzy => {
                let table = text_frequencies(train, tokenizer);
                let words = build_frequent_words(&table, stage.param_u64("min_frequency"));
                ctx.set_frequent_words(Arc::new(FuzzyIndex::build(&words.words)));
            }
            BlacklistRegex | ProfaneFuzzy => {
                let table = text_frequencies(train, tokenizer);
                let words = build_frequent_words(&table, GUARD_MIN_FREQUENCY);
                let matcher = ObfuscationMatcher::from_lexicons(lexicons, words.words.iter().map(String::as_str));
                ctx.matcher = Some(Arc::new(matcher));
            }
            _ => {}
        }
        let wrap = |e: Error| Error::Stage {
            index,
            name: stage.name.to_string(),
            source: Box::new(e),
        };
        for split in [&mut *train, &mut *test] {
            let out: Vec<String> = split
                .par_iter()
                .map(|t| apply_transform(t, stage, &ctx))
                .collect::<Result<_>>()
                .map_err(wrap)?;
            split.iter_mut().zip(out).for_each(|(s, o)| *s = o);
        }
    }
    Ok(())
}

/// Everything a model sees for one fold.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub test_indices: Vec<usize>,
    pub vocabulary: Vocabulary,
    pub x_train: Vec<SparseVector>,
    pub y_train: Vec<u8>,
    pub x_test: Vec<SparseVector>,
    pub y_test: Vec<u8>,
}

/// Transforms, tokenizes and vectorizes one fold. All resources, including
/// the vocabulary, come from the training folds only.
pub fn prepare_fold(
    docs: &[Document],
    folds: &FoldAssignment,
    fold: usize,
    condition: &Condition,
    lexicons: &Arc<LexiconSet>,
    cfg: &EvalConfig,
) -> Result<PreparedFold> {
    let tokenizer = Tokenizer::default();
    let train_idx = folds.train_indices(fold);
    let test_indices = folds.test_indices(fold);
    let mut train: Vec<String> = train_idx.iter().map(|&i| docs[i].text.clone()).collect();
    let mut test: Vec<String> = test_indices.iter().map(|&i| docs[i].text.clone()).collect();
    if let Some(p) = &condition.pipeline {
        transform_split(&mut train, &mut test, p, lexicons, &tokenizer)?;
    }
    let train_tokens: Vec<Vec<String>> = train.iter().map(|t| tokenizer.tokenize(t)).collect();
    let vocabulary = build_vocabulary(&train_tokens, cfg.ngram_range, cfg.min_df)?;
    let x_train = train_tokens.iter().map(|t| vectorize(t, &vocabulary)).collect();
    let x_test = test.iter().map(|t| vectorize(&tokenizer.tokenize(t), &vocabulary)).collect();
    Ok(PreparedFold {
        y_train: train_idx.iter().map(|&i| docs[i].label).collect(),
        y_test: test_indices.iter().map(|&i| docs[i].label).collect(),
        test_indices,
        vocabulary,
        x_train,
        x_test,
    })
}

/// Runs k-fold cross-validation of one model family under one condition.
pub fn run_cell(
    docs: &[Document],
    condition: &Condition,
    model: ModelKind,
    lexicons: &Arc<LexiconSet>,
    cfg: &EvalConfig,
) -> Result<FoldReport> {
    run_cell_with(docs, condition, &cfg.trainer(model), lexicons, cfg)
}

pub fn run_cell_with(
    docs: &[Document],
    condition: &Condition,
    trainer: &dyn Trainer,
    lexicons: &Arc<LexiconSet>,
    cfg: &EvalConfig,
) -> Result<FoldReport> {
    let start = Instant::now();
    let labels: Vec<u8> = docs.iter().map(|d| d.label).collect();
    let folds = stratified_folds(&labels, cfg.k, cfg.fold_seed())?;
    let per_fold: Vec<(MetricSet, Vec<usize>, Vec<f64>)> = (0..cfg.k)
        .into_par_iter()
        .map(|fold| {
            let run = || -> Result<_> {
                let prep = prepare_fold(docs, &folds, fold, condition, lexicons, cfg)?;
                let model = trainer.fit(&prep.x_train, &prep.y_train, prep.vocabulary.len())?;
                let probs: Vec<f64> = prep.x_test.iter().map(|x| model.predict_proba(x)).collect();
                let metrics = compute_metrics(&probs, &prep.y_test, cfg.threshold)?;
                Ok((metrics, prep.test_indices, probs))
            };
            run().map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut oof = vec![f64::NAN; docs.len()];
    let mut metrics = Vec::with_capacity(cfg.k);
    for (m, idx, probs) in per_fold {
        for (i, p) in idx.into_iter().zip(probs) {
            oof[i] = p;
        }
        metrics.push(m);
    }
    Ok(FoldReport {
        pipeline: condition.id.clone(),
        model: trainer.name(),
        aggregate: MetricSet::aggregate(&metrics)?,
        folds: metrics,
        oof,
        wall_time: start.elapsed(),
    })
}

/// Seeded stratified sample of `n` documents, returned in corpus order.
pub fn subsample(docs: &[Document], n: usize, seed: u64) -> Result<Vec<Document>> {
    if n < 2 || n > docs.len() {
        return Err(Error::InvalidArgument(format!(
            "subsample size {n} must be in 2..={}",
            docs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..docs.len()).filter(|&i| docs[i].label == 1).collect();
    let mut neg: Vec<usize> = (0..docs.len()).filter(|&i| docs[i].label != 1).collect();
    let n_pos = ((n as f64) * pos.len() as f64 / docs.len() as f64).round() as usize;
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);
    let mut keep: Vec<usize> = neg[..n_neg].iter().chain(&pos[..n_pos]).copied().collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| docs[i].clone()).collect())
}

/// SHA-256 over ids, texts and labels.
pub fn corpus_fingerprint(docs: &[Document]) -> String {
    let mut h = Sha256::new();
    for d in docs {
        h.update(d.id.as_bytes());
        h.update([0]);
        h.update(d.text.as_bytes());
        h.update([0, d.label, b'\n']);
    }
    format!("{:x}", h.finalize())
}

/// Writes `bytes` to a temporary file beside `path`, then renames it.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Per-cell report cache, keyed by condition, model, seed, k, the rest of
/// the configuration and the corpus fingerprint.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub dir: PathBuf,
}

impl CellCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CellCache { dir: dir.into() }
    }

    pub fn key(condition: &Condition, model: &str, cfg: &EvalConfig, fingerprint: &str) -> String {
        let pipeline = condition
            .pipeline
            .as_ref()
            .map(|p| serialize_pipelines(std::slice::from_ref(p)))
            .unwrap_or_default();
        let config = serde_json::to_string(cfg).expect("config serializes");
        let digest = Sha256::new()
            .chain_update(condition.id.as_bytes())
            .chain_update([0])
            .chain_update(pipeline.as_bytes())
            .chain_update([0])
            .chain_update(model.as_bytes())
            .chain_update([0])
            .chain_update(config.as_bytes())
            .chain_update([0])
            .chain_update(fingerprint.as_bytes())
            .finalize();
        format!("{:x}", digest)
    }

    pub fn path(&self, condition: &Condition, model: &str, cfg: &EvalConfig, fingerprint: &str) -> PathBuf {
        let key = Self::key(condition, model, cfg, fingerprint);
        self.dir
            .join(format!("{}__{}__{}.json", file_safe(&condition.id), file_safe(model), &key[..16]))
    }

    pub fn load(&self, path: &Path) -> Option<FoldReport> {
        let text = std::fs::read_to_string(path).ok()?;
        match serde_json::from_str(&text) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store(&self, path: &Path, report: &FoldReport) -> Result<()> {
        let text = serde_json::to_string_pretty(report).map_err(|e| Error::Serde(e.to_string()))?;
        atomic_write(path, text.as_bytes())
    }

    /// Every readable cached report in the directory, sorted by file name.
    pub fn load_all(&self) -> Result<Vec<FoldReport>> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&self.dir)
            .map_err(|e| Error::io(&self.dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        Ok(paths.iter().filter_map(|p| self.load(p)).collect())
    }
}

pub fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub accuracy: f64,
    pub f1_pos: f64,
    pub f1_neg: f64,
    pub logloss: f64,
    pub misclassified: i64,
    pub precision_neg: f64,
    pub recall_neg: f64,
}

impl MetricDelta {
    pub fn between(cell: &MetricSet, base: &MetricSet) -> Self {
        MetricDelta {
            accuracy: cell.accuracy - base.accuracy,
            f1_pos: cell.f1_pos - base.f1_pos,
            f1_neg: cell.f1_neg - base.f1_neg,
            logloss: cell.logloss - base.logloss,
            misclassified: cell.misclassified as i64 - base.misclassified as i64,
            precision_neg: cell.precision_neg - base.precision_neg,
            recall_neg: cell.recall_neg - base.recall_neg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub pipeline: String,
    pub model: String,
    pub metrics: MetricSet,
    /// Difference from the Raw cell of the same model, when one was run.
    pub delta_vs_raw: Option<MetricDelta>,
}

/// Rows grouped by model, sorted by aggregate logloss within each model.
pub fn comparison_table(reports: &[FoldReport]) -> Vec<ComparisonRow> {
    let raw: BTreeMap<&str, &MetricSet> = reports
        .iter()
        .filter(|r| r.pipeline == RAW)
        .map(|r| (r.model.as_str(), &r.aggregate))
        .collect();
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            pipeline: r.pipeline.clone(),
            model: r.model.clone(),
            metrics: r.aggregate.clone(),
            delta_vs_raw: raw.get(r.model.as_str()).map(|b| MetricDelta::between(&r.aggregate, b)),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.model
            .cmp(&b.model)
            .then(a.metrics.logloss.total_cmp(&b.metrics.logloss))
            .then_with(|| a.pipeline.cmp(&b.pipeline))
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub pipeline: String,
    pub model: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct GridResult {
    /// Completed cells in grid order (conditions outer, models inner).
    pub reports: Vec<FoldReport>,
    pub failures: Vec<CellFailure>,
    pub table: Vec<ComparisonRow>,
    /// Number of cells served from the cache.
    pub cached: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GridOptions {
    pub cache: Option<CellCache>,
    /// Upper bound on worker threads; 0 uses the global pool.
    pub jobs: usize,
    /// Recompute cells even when cached, then overwrite the cache.
    pub refresh: bool,
}

/// Runs every (condition, model) cell. A failing cell is recorded and the
/// grid continues.
pub fn run_grid(
    docs: &[Document],
    conditions: &[Condition],
    models: &[ModelKind],
    lexicons: &Arc<LexiconSet>,
    cfg: &EvalConfig,
    opts: &GridOptions,
) -> Result<GridResult> {
    let cells: Vec<(&Condition, ModelKind)> = conditions
        .iter()
        .flat_map(|c| models.iter().map(move |&m| (c, m)))
        .collect();
    let fingerprint = corpus_fingerprint(docs);

    let run_all = || -> Vec<(Result<FoldReport>, bool)> {
        cells
            .par_iter()
            .map(|&(cond, model)| {
                let path = opts
                    .cache
                    .as_ref()
                    .map(|c| (c, c.path(cond, model.as_str(), cfg, &fingerprint)));
                if let (Some((cache, p)), false) = (&path, opts.refresh) {
                    if let Some(r) = cache.load(p) {
                        log::info!("cell {} / {model}: cached", cond.id);
                        return (Ok(r), true);
                    }
                }
                log::info!("cell {} / {model}: running", cond.id);
                let result = run_cell(docs, cond, model, lexicons, cfg);
                if let (Ok(r), Some((cache, p))) = (&result, &path) {
                    if let Err(e) = cache.store(p, r) {
                        log::warn!("could not cache cell {} / {model}: {e}", cond.id);
                    }
                }
                (result, false)
            })
            .collect()
    };
    let outcomes = if opts.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run_all)
    } else {
        run_all()
    };

    let mut out = GridResult::default();
    for ((cond, model), (result, cached)) in cells.iter().zip(outcomes) {
        match result {
            Ok(r) => {
                out.cached += usize::from(cached);
                out.reports.push(r);
            }
            Err(e) => {
                log::error!("cell {} / {model} failed: {e}", cond.id);
                out.failures.push(CellFailure {
                    pipeline: cond.id.clone(),
                    model: model.to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    out.table = comparison_table(&out.reports);
    Ok(out)
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "pipeline",
    "model",
    "fold",
    "accuracy",
    "f1_pos",
    "f1_neg",
    "logloss",
    "misclassified",
    "precision_neg",
    "recall_neg",
];

/// Per-fold rows plus an `aggregate` row for each report.
pub fn report_csv(reports: &[FoldReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(REPORT_COLUMNS).map_err(ser)?;
    for r in reports {
        let rows = r
            .folds
            .iter()
            .enumerate()
            .map(|(i, m)| (i.to_string(), m))
            .chain(std::iter::once(("aggregate".to_string(), &r.aggregate)));
        for (fold, m) in rows {
            w.write_record([
                r.pipeline.clone(),
                r.model.clone(),
                fold,
                m.accuracy.to_string(),
                m.f1_pos.to_string(),
                m.f1_neg.to_string(),
                m.logloss.to_string(),
                m.misclassified.to_string(),
                m.precision_neg.to_string(),
                m.recall_neg.to_string(),
            ])
            .map_err(ser)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn comparison_json(table: &[ComparisonRow]) -> Result<String> {
    serde_json::to_string_pretty(table).map_err(|e| Error::Serde(e.to_string()))
}

/// Fixed-width text table for terminals.
pub fn render_table(table: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<44} {:<6} {:>9} {:>8} {:>8} {:>8} {:>7} {:>10}\n",
        "pipeline", "model", "logloss", "acc", "f1_pos", "f1_neg", "miscls", "d_logloss"
    );
    for r in table {
        let m = &r.metrics;
        let delta = r
            .delta_vs_raw
            .as_ref()
            .map(|d| format!("{:+.5}", d.logloss))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<44} {:<6} {:>9.5} {:>8.4} {:>8.4} {:>8.4} {:>7} {:>10}\n",
            r.pipeline, r.model, m.logloss, m.accuracy, m.f1_pos, m.f1_neg, m.misclassified, delta
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use crate::textops::TransformSpec;
    use rand::Rng;

    #[test]
    fn twenty_labels_ten_folds() {
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let f = stratified_folds(&labels, 10, 3).unwrap();
        for fold in 0..10 {
            let idx = f.test_indices(fold);
            assert_eq!(idx.len(), 2);
            assert_eq!(idx.iter().filter(|&&i| labels[i] == 1).count(), 1);
        }
        assert_eq!(f, stratified_folds(&labels, 10, 3).unwrap());
    }

    #[test]
    fn full_corpus_fold_sizes() {
        let n = 159_571;
        let pos = 16_225;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i < pos)).collect();
        let sizes = stratified_folds(&labels, 10, 1).unwrap().fold_sizes();
        assert!(sizes.iter().all(|&s| s == 15_957 || s == 15_958), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), n);
    }

    #[test]
    fn small_class_rejected() {
        assert!(stratified_folds(&[0, 0, 0, 1], 2, 0).is_err());
        assert!(stratified_folds(&[0, 1, 0, 1], 1, 0).is_err());
    }

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&[0.5], &[1], 0.5).unwrap();
        assert_abs_diff_eq!(m.logloss, std::f64::consts::LN_2, epsilon = 1e-15);
        let m = compute_metrics(&[0.9, 0.2, 0.8, 0.1], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!((m.accuracy, m.f1_pos, m.f1_neg, m.misclassified), (1.0, 1.0, 1.0, 0));
        assert!(compute_metrics(&[], &[], 0.5).is_err());
    }

    #[test]
    fn majority_class_accuracy() {
        let labels: Vec<u8> = (0..159_571).map(|i| u8::from(i < 16_225)).collect();
        let probs = vec![0.0; labels.len()];
        let m = compute_metrics(&probs, &labels, 0.5).unwrap();
        assert_eq!(m.misclassified, 16_225);
        assert_eq!(m.accuracy, 1.0 - 16_225.0 / 159_571.0);
        assert_eq!(m.f1_pos, 0.0);
    }

    #[test]
    fn aggregate_sums_misclassified() {
        let a = compute_metrics(&[0.9, 0.9], &[1, 0], 0.5).unwrap();
        let b = compute_metrics(&[0.1, 0.9], &[1, 0], 0.5).unwrap();
        let agg = MetricSet::aggregate(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(agg.misclassified, 3);
        assert_eq!(agg.accuracy, (a.accuracy + b.accuracy) / 2.0);
    }

    fn synthetic(n: usize, seed: u64) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = u8::from(rng.gen_bool(0.3));
                let marker = if label == 1 { "bad" } else { "good" };
                let noise = format!("w{} w{}", rng.gen_range(0..20), rng.gen_range(0..20));
                let text = if rng.gen_bool(0.8) { format!("{marker} {noise}") } else { noise };
                Document::new(i.to_string(), text, label)
            })
            .collect()
    }

    #[test]
    fn subsample_contract() {
        let docs = synthetic(500, 1);
        let same = subsample(&docs, docs.len(), 4).unwrap();
        assert_eq!(same, docs);
        let pos = docs.iter().filter(|d| d.label == 1).count() as f64 / docs.len() as f64;
        let s = subsample(&docs, 100, 4).unwrap();
        let got = s.iter().filter(|d| d.label == 1).count() as f64;
        assert!((got - 100.0 * pos).abs() <= 1.0);
        assert_eq!(s, subsample(&docs, 100, 4).unwrap());
        assert!(subsample(&docs, 1, 4).is_err());
        assert!(subsample(&docs, 501, 4).is_err());
    }

    #[test]
    fn raw_cell_structure_and_determinism() {
        let docs = synthetic(200, 2);
        let lex = Arc::new(LexiconSet::builtin());
        let cfg = EvalConfig {
            seed: 5,
            ..EvalConfig::default()
        };
        let r = run_cell(&docs, &Condition::raw(), ModelKind::Logit, &lex, &cfg).unwrap();
        assert_eq!(r.folds.len(), 10);
        assert!(r.oof.iter().all(|p| p.is_finite()));
        assert_eq!(r.folds.iter().map(|m| m.n).sum::<usize>(), 200);
        for m in r.folds.iter().chain([&r.aggregate]) {
            assert!(m.check().is_empty(), "{:?}", m.check());
        }
        assert_eq!(r.aggregate.misclassified, r.folds.iter().map(|m| m.misclassified).sum::<usize>());
        let again = run_cell(&docs, &Condition::raw(), ModelKind::Logit, &lex, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn grid_records_failures_and_deltas() {
        let docs = synthetic(120, 3);
        let lex = Arc::new(LexiconSet::builtin());
        let cfg = EvalConfig {
            k: 3,
            ..EvalConfig::default()
        };
        let registry = Registry::default();
        let conds = vec![
            Condition::raw(),
            Condition::resolve(&registry, "to_lower").unwrap(),
            // Removes every token, so the vocabulary is empty and the cell fails.
            Condition::pipeline(
                PipelineSpec::new(
                    "drop-all",
                    vec![TransformSpec::new(TransformName::RemoveRareWords).with_param("min_count", 1_000_000)],
                )
                .unwrap(),
            ),
        ];
        let g = run_grid(&docs, &conds, &[ModelKind::Logit, ModelKind::Nbsvm], &lex, &cfg, &GridOptions::default()).unwrap();
        assert_eq!(g.reports.len(), 4);
        assert_eq!(g.failures.len(), 2);
        for row in g.table.iter().filter(|r| r.pipeline == RAW) {
            let d = row.delta_vs_raw.as_ref().unwrap();
            assert_eq!((d.logloss, d.accuracy, d.misclassified), (0.0, 0.0, 0));
        }
    }

    #[test]
    fn cache_round_trip() {
        let docs = synthetic(100, 4);
        let lex = Arc::new(LexiconSet::builtin());
        let cfg = EvalConfig {
            k: 2,
            ..EvalConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let opts = GridOptions {
            cache: Some(CellCache::new(dir.path())),
            jobs: 2,
            refresh: false,
        };
        let first = run_grid(&docs, &[Condition::raw()], &[ModelKind::Logit], &lex, &cfg, &opts).unwrap();
        assert_eq!(first.cached, 0);
        let second = run_grid(&docs, &[Condition::raw()], &[ModelKind::Logit], &lex, &cfg, &opts).unwrap();
        assert_eq!(second.cached, 1);
        assert_eq!(first.reports[0].aggregate, second.reports[0].aggregate);
        assert_eq!(report_csv(&first.reports).unwrap(), report_csv(&second.reports).unwrap());
    }

    #[test]
    fn csv_layout() {
        let m = compute_metrics(&[0.9, 0.1], &[1, 0], 0.5).unwrap();
        let r = FoldReport {
            pipeline: "Raw".into(),
            model: "logit".into(),
            folds: vec![m.clone()],
            aggregate: m,
            oof: vec![],
            wall_time: Duration::ZERO,
        };
        let csv = report_csv(&[r]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_COLUMNS.join(","));
        assert!(lines[1].starts_with("Raw,logit,0,1,"));
        assert!(lines[2].starts_with("Raw,logit,aggregate,1,"));
    }

    #[test]
    fn sentinel_never_enters_training_vocabulary() {
        let mut docs = synthetic(100, 6);
        let lex = Arc::new(LexiconSet::builtin());
        let cfg = EvalConfig {
            k: 5,
            min_df: 1,
            ..EvalConfig::default()
        };
        let labels: Vec<u8> = docs.iter().map(|d| d.label).collect();
        let folds = stratified_folds(&labels, 5, 1).unwrap();
        let before = prepare_fold(&docs, &folds, 0, &Condition::raw(), &lex, &cfg).unwrap();
        let target = folds.test_indices(0)[0];
        docs[target].text.push_str(" zzsentinelzz");
        let after = prepare_fold(&docs, &folds, 0, &Condition::raw(), &lex, &cfg).unwrap();
        assert_eq!(before.vocabulary.len(), after.vocabulary.len());
        assert!(after.vocabulary.index_of("zzsentinelzz").is_none());
    }

    proptest! {
        #[test]
        fn logloss_matches_oracle(pairs in proptest::collection::vec((0.0f64..=1.0, 0u8..2), 1..50)) {
            let probs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let m = compute_metrics(&probs, &labels, 0.5).unwrap();
            let oracle = pairs.iter().map(|&(p, y)| {
                let p = p.max(1e-15).min(1.0 - 1e-15);
                let y = f64::from(y);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            }).sum::<f64>() / pairs.len() as f64;
            prop_assert!((m.logloss - oracle).abs() <= 1e-12 * oracle.max(1.0));
            prop_assert_eq!(m.accuracy + m.misclassified as f64 / m.n as f64, 1.0);
            prop_assert!(m.check().is_empty());
        }

        #[test]
        fn folds_partition_and_stratify(labels in proptest::collection::vec(0u8..2, 40..200), k in 2usize..8, seed: u64) {
            let pos = labels.iter().filter(|&&l| l == 1).count();
            prop_assume!(pos >= k && labels.len() - pos >= k);
            let f = stratified_folds(&labels, k, seed).unwrap();
            prop_assert!(f.fold_of.iter().all(|&x| x < k));
            for class in [0u8, 1] {
                let counts: Vec<usize> = (0..k)
                    .map(|fold| f.test_indices(fold).iter().filter(|&&i| labels[i] == class).count())
                    .collect();
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
            let sizes = f.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
