//! Command-line interface: `stats`, `transform`, `bench` and `report`.
//!
//! Settings come from an optional TOML file and are overridden by flags.
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 every benchmark cell failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::corpus::{count_histogram, frequency_stats, load_corpus, text_frequencies, Document};
use crate::error::Error;
use crate::eval::{
    atomic_write, comparison_json, comparison_table, file_safe, render_table, report_csv, run_grid, subsample,
    transform_split, CellCache, Condition, EvalConfig, GridOptions,
};
use crate::lexicons::LexiconSet;
use crate::models::{Hyper, ModelKind};
use crate::textops::{parse_pipelines, PipelineSpec, Registry, Tokenizer, TokenizerMode};

pub const LEXICON_DIR_ENV: &str = "TOXPREP_LEXICON_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "toxprep", version, about = "Text normalization and benchmarking for abusive-comment classification")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory of lexicon files replacing the built-in copies.
    #[arg(long, global = true, env = LEXICON_DIR_ENV)]
    pub lexicon_dir: Option<PathBuf>,

    /// Pipeline definitions replacing the built-in composites.
    #[arg(long, global = true)]
    pub pipeline_file: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Word-frequency statistics and the count-of-counts histogram.
    Stats(StatsArgs),
    /// Apply a pipeline to a text or to every document of a corpus file.
    Transform(TransformArgs),
    /// Cross-validate every (pipeline, model) cell and write reports.
    Bench(BenchArgs),
    /// Re-render the comparison table from cached cells.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Read only the first N records.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    /// Lowercase tokens before counting.
    #[arg(long)]
    pub lowercase: bool,
    /// Write stats.json and histogram.csv here instead of printing JSON.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Pipeline id, transform name, or Raw.
    #[arg(long, short)]
    pub pipeline: String,
    /// Text to transform.
    #[arg(conflicts_with = "input")]
    pub text: Option<String>,
    /// Corpus CSV; prints `id<TAB>transformed text` per document.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Corpus whose word counts feed frequency-dependent stages. Defaults
    /// to the input file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Comma-separated pipeline ids (Raw for the baseline), or `all`.
    #[arg(long, value_delimiter = ',')]
    pub pipelines: Option<Vec<String>>,
    /// Comma-separated model kinds.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stratified subsample size.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Recompute every cell, ignoring cached reports.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Settings readable from the TOML config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon_dir: Option<PathBuf>,
    pub pipeline_file: Option<PathBuf>,
    pub pipelines: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub subsample: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub min_df: Option<usize>,
    pub hyper: Option<HyperConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub learning_rate: Option<f64>,
    pub l2_lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub lexicon_dir: Option<PathBuf>,
    pub pipeline_file: Option<PathBuf>,
    pub pipelines: Vec<String>,
    pub models: Vec<ModelKind>,
    pub k: usize,
    pub seed: u64,
    pub subsample: Option<usize>,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub refresh: bool,
    pub eval: EvalConfig,
}

impl RunConfig {
    /// Merges flags over file values and validates the result.
    pub fn resolve(cli: &Cli, file: &FileConfig, args: &BenchArgs) -> Result<Self, CliError> {
        let cfg = |m: &str| CliError::Config(m.to_string());
        let corpus = args
            .corpus
            .clone()
            .or_else(|| file.corpus.clone())
            .ok_or_else(|| cfg("no corpus given (--corpus or `corpus` in the config file)"))?;
        if !corpus.is_file() {
            return Err(CliError::Config(format!("corpus {} does not exist", corpus.display())));
        }
        let seed = args
            .seed
            .or(file.seed)
            .ok_or_else(|| cfg("a seed is required (--seed or `seed` in the config file)"))?;
        let k = args.k.or(file.k).unwrap_or(10);
        if k < 2 {
            return Err(cfg("k must be at least 2"));
        }
        let model_names = args
            .models
            .clone()
            .or_else(|| file.models.clone())
            .unwrap_or_else(|| vec!["logit".into(), "nbsvm".into()]);
        let models = model_names
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<ModelKind>().map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if models.is_empty() {
            return Err(cfg("the model list is empty"));
        }
        let pipelines = args
            .pipelines
            .clone()
            .or_else(|| file.pipelines.clone())
            .unwrap_or_else(|| vec!["all".into()]);
        if pipelines.is_empty() {
            return Err(cfg("the pipeline list is empty"));
        }
        let output_dir = args
            .output_dir
            .clone()
            .or_else(|| file.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("toxprep-out"));
        let h = file.hyper.clone().unwrap_or_default();
        let d = Hyper::default();
        let hyper = Hyper {
            learning_rate: h.learning_rate.unwrap_or(d.learning_rate),
            l2_lambda: h.l2_lambda.unwrap_or(d.l2_lambda),
            epochs: h.epochs.unwrap_or(d.epochs),
            batch_size: h.batch_size.unwrap_or(d.batch_size),
            beta: h.beta.unwrap_or(d.beta),
            alpha: h.alpha.unwrap_or(d.alpha),
            seed: d.seed,
        };
        Ok(RunConfig {
            corpus,
            lexicon_dir: cli.lexicon_dir.clone().or_else(|| file.lexicon_dir.clone()),
            pipeline_file: cli.pipeline_file.clone().or_else(|| file.pipeline_file.clone()),
            pipelines,
            models,
            k,
            seed,
            subsample: args.subsample.or(file.subsample),
            output_dir,
            jobs: args.jobs.or(file.jobs).unwrap_or(0),
            refresh: args.no_cache,
            eval: EvalConfig {
                k,
                seed,
                min_df: file.min_df.unwrap_or(2),
                hyper,
                ..EvalConfig::default()
            },
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(Error),
    #[error("all {0} cells failed")]
    AllCellsFailed(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Pipeline(_) | Error::UnknownPipeline { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Data(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::AllCellsFailed(_) => EXIT_ALL_FAILED,
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Stats(a) => cmd_stats(&file, a, out),
        Command::Transform(a) => cmd_transform(cli, &file, a, out),
        Command::Bench(a) => cmd_bench(&RunConfig::resolve(cli, &file, a)?, out),
        Command::Report(a) => cmd_report(&file, a, out),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(Error::io(path, e))
}

fn load_lexicons(dir: Option<&Path>) -> Result<Arc<LexiconSet>, CliError> {
    Ok(Arc::new(match dir {
        Some(d) => LexiconSet::load_dir(d)?,
        None => LexiconSet::builtin(),
    }))
}

fn load_registry(pipeline_file: Option<&Path>) -> Result<Registry, CliError> {
    match pipeline_file {
        None => Ok(Registry::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            Ok(Registry::with_composites(parse_pipelines(&text)?)?)
        }
    }
}

fn load_nonempty(path: &Path, limit: Option<usize>) -> Result<Vec<Document>, CliError> {
    let docs = load_corpus(path, limit)?;
    if docs.is_empty() {
        return Err(CliError::Data(Error::CsvRow {
            row: 1,
            message: format!("corpus {} contains no documents", path.display()),
        }));
    }
    Ok(docs)
}

fn write_out(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    out.write_all(s.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

pub fn cmd_stats(file: &FileConfig, a: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = a
        .corpus
        .clone()
        .or_else(|| file.corpus.clone())
        .ok_or_else(|| CliError::Config("no corpus given".into()))?;
    let docs = load_nonempty(&path, a.limit)?;
    let mode = if a.lowercase {
        TokenizerMode::LowercaseWhitespace
    } else {
        TokenizerMode::Whitespace
    };
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let table = text_frequencies(&texts, &Tokenizer::new(mode));
    let summary = frequency_stats(&table, a.top_k);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(Error::Serde(e.to_string())))? + "\n";
    let mut hist = String::from("occurrence_count,num_words\n");
    for (count, words) in count_histogram(&table) {
        hist.push_str(&format!("{count},{words}\n"));
    }
    match a.output_dir.clone().or_else(|| file.output_dir.clone()) {
        Some(dir) => {
            atomic_write(&dir.join("stats.json"), json.as_bytes())?;
            atomic_write(&dir.join("histogram.csv"), hist.as_bytes())?;
            write_out(out, &format!("wrote {} and {}\n", dir.join("stats.json").display(), dir.join("histogram.csv").display()))
        }
        None => write_out(out, &json),
    }
}

pub fn cmd_transform(cli: &Cli, file: &FileConfig, a: &TransformArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let registry = load_registry(cli.pipeline_file.as_deref().or(file.pipeline_file.as_deref()))?;
    let condition = Condition::resolve(&registry, &a.pipeline)?;
    let lexicons = load_lexicons(cli.lexicon_dir.as_deref().or(file.lexicon_dir.as_deref()))?;
    let resource_docs = match &a.corpus {
        Some(p) => load_corpus(p, None)?,
        None => Vec::new(),
    };

    match (&a.text, &a.input) {
        (Some(text), None) => {
            let result = match &condition.pipeline {
                None => text.clone(),
                Some(p) => {
                    let mut train: Vec<String> = resource_docs.into_iter().map(|d| d.text).collect();
                    let mut test = vec![text.clone()];
                    fit_transform(&mut train, &mut test, p, &lexicons)?;
                    test.pop().unwrap_or_default()
                }
            };
            write_out(out, &format!("{result}\n"))
        }
        (None, Some(input)) => {
            let docs = load_corpus(input, None)?;
            let mut texts: Vec<String> = docs.iter().map(|d| d.text.clone()).collect();
            if let Some(p) = &condition.pipeline {
                if a.corpus.is_some() {
                    let mut train: Vec<String> = resource_docs.into_iter().map(|d| d.text).collect();
                    fit_transform(&mut train, &mut texts, p, &lexicons)?;
                } else {
                    fit_transform(&mut texts, &mut [], p, &lexicons)?;
                }
            }
            let mut s = String::new();
            for (d, t) in docs.iter().zip(&texts) {
                s.push_str(&d.id);
                s.push('\t');
                s.push_str(&t.replace(['\n', '\r', '\t'], " "));
                s.push('\n');
            }
            write_out(out, &s)
        }
        (None, None) => Err(CliError::Config("give a TEXT argument or --input FILE".into())),
        (Some(_), Some(_)) => Err(CliError::Config("TEXT and --input are mutually exclusive".into())),
    }
}

fn fit_transform(
    train: &mut [String],
    test: &mut [String],
    p: &PipelineSpec,
    lexicons: &Arc<LexiconSet>,
) -> Result<(), CliError> {
    Ok(transform_split(train, test, p, lexicons, &Tokenizer::default())?)
}

fn cache_dir(output_dir: &Path) -> PathBuf {
    output_dir.join("cells")
}

/// Writes per-cell and combined reports. Rows are ordered Raw first, then by
/// pipeline and model, so `bench` and `report` produce identical files.
fn write_reports(dir: &Path, reports: &[crate::eval::FoldReport]) -> Result<Vec<crate::eval::ComparisonRow>, CliError> {
    let mut sorted: Vec<crate::eval::FoldReport> = reports.to_vec();
    sorted.sort_by(|x, y| (x.pipeline != "Raw", &x.pipeline, &x.model).cmp(&(y.pipeline != "Raw", &y.pipeline, &y.model)));
    let reports = &sorted[..];
    for r in reports {
        let name = format!("{}__{}.csv", file_safe(&r.pipeline), file_safe(&r.model));
        atomic_write(&dir.join("reports").join(name), report_csv(std::slice::from_ref(r))?.as_bytes())?;
    }
    atomic_write(&dir.join("report.csv"), report_csv(reports)?.as_bytes())?;
    let table = comparison_table(reports);
    atomic_write(&dir.join("comparison.json"), (comparison_json(&table)? + "\n").as_bytes())?;
    Ok(table)
}

pub fn cmd_bench(rc: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let registry = load_registry(rc.pipeline_file.as_deref())?;
    let lexicons = load_lexicons(rc.lexicon_dir.as_deref())?;
    let mut conditions = Vec::new();
    for id in &rc.pipelines {
        if id == "all" {
            conditions.push(Condition::raw());
            conditions.extend(registry.pipelines().iter().cloned().map(Condition::pipeline));
        } else {
            conditions.push(Condition::resolve(&registry, id)?);
        }
    }
    let mut docs = load_nonempty(&rc.corpus, None)?;
    if let Some(n) = rc.subsample {
        docs = subsample(&docs, n, rc.eval.subsample_seed())?;
    }
    log::info!("bench: {} documents, {} conditions, {} models", docs.len(), conditions.len(), rc.models.len());
    let opts = GridOptions {
        cache: Some(CellCache::new(cache_dir(&rc.output_dir))),
        jobs: rc.jobs,
        refresh: rc.refresh,
    };
    let grid = run_grid(&docs, &conditions, &rc.models, &lexicons, &rc.eval, &opts)?;
    let table = write_reports(&rc.output_dir, &grid.reports)?;
    let failures = serde_json::to_string_pretty(&grid.failures).map_err(|e| CliError::Data(Error::Serde(e.to_string())))?;
    atomic_write(&rc.output_dir.join("failures.json"), (failures + "\n").as_bytes())?;

    write_out(out, &render_table(&table))?;
    write_out(
        out,
        &format!(
            "{} cells: {} completed ({} cached), {} failed\n",
            conditions.len() * rc.models.len(),
            grid.reports.len(),
            grid.cached,
            grid.failures.len()
        ),
    )?;
    if grid.reports.is_empty() && !grid.failures.is_empty() {
        return Err(CliError::AllCellsFailed(grid.failures.len()));
    }
    Ok(())
}

/// Rebuilds combined reports from `output_dir/cells` without recomputing.
pub fn cmd_report(file: &FileConfig, a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = a
        .output_dir
        .clone()
        .or_else(|| file.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory given".into()))?;
    let reports = CellCache::new(cache_dir(&dir)).load_all()?;
    if reports.is_empty() {
        return Err(CliError::Data(Error::InvalidArgument(format!(
            "no cached cells under {}",
            cache_dir(&dir).display()
        ))));
    }
    let table = write_reports(&dir, &reports)?;
    write_out(out, &render_table(&table))
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
