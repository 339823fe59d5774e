//! Runs a small pipeline x model grid with a cell cache and writes the
//! report CSV and comparison JSON, as the `bench` command does.
//!
//! ```text
//! cargo run --release --example bench_grid -- [output-dir]
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use toxprep::eval::{
    atomic_write, comparison_json, render_table, report_csv, run_grid, subsample, CellCache, Condition, EvalConfig,
    GridOptions,
};
use toxprep::synth::{generate_documents, SynthConfig};
use toxprep::textops::Registry;
use toxprep::{LexiconSet, ModelKind};

fn main() -> toxprep::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "bench-out".into()));
    let cfg = EvalConfig { seed: 7, ..EvalConfig::default() };
    let corpus = generate_documents(&SynthConfig { n_docs: 4000, ..SynthConfig::default() });
    let docs = subsample(&corpus, 2000, cfg.subsample_seed())?;

    let registry = Registry::default();
    let conditions = ["Raw", "PPO-11-LWTN-CoAcBkPrCm", "strip_non_alphabet_chars"]
        .iter()
        .map(|id| Condition::resolve(&registry, id))
        .collect::<toxprep::Result<Vec<_>>>()?;
    let opts = GridOptions { cache: Some(CellCache::new(out.join("cells"))), jobs: 0, refresh: false };
    let lexicons = Arc::new(LexiconSet::builtin());
    let grid = run_grid(&docs, &conditions, &[ModelKind::Logit, ModelKind::Nbsvm], &lexicons, &cfg, &opts)?;

    atomic_write(&out.join("report.csv"), report_csv(&grid.reports)?.as_bytes())?;
    atomic_write(&out.join("comparison.json"), comparison_json(&grid.table)?.as_bytes())?;
    print!("{}", render_table(&grid.table));
    println!("{} cells ({} from cache), {} failures; reports in {}", grid.reports.len(), grid.cached, grid.failures.len(), out.display());
    Ok(())
}
