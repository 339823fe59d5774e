//! Stratified 10-fold cross-validation of one (pipeline, model) cell.

use std::sync::Arc;

use toxprep::eval::{Condition, EvalConfig};
use toxprep::synth::{generate_documents, SynthConfig};
use toxprep::textops::Registry;
use toxprep::{run_cell, LexiconSet, ModelKind};

fn main() -> toxprep::Result<()> {
    let docs = generate_documents(&SynthConfig { n_docs: 1000, ..SynthConfig::default() });
    let lexicons = Arc::new(LexiconSet::builtin());
    let registry = Registry::default();
    let cfg = EvalConfig { seed: 7, ..EvalConfig::default() };

    for id in ["Raw", "strip_non_alphabet_chars", "PPO-8-LWTN-CoAcBkPr"] {
        let condition = Condition::resolve(&registry, id)?;
        let report = run_cell(&docs, &condition, ModelKind::Logit, &lexicons, &cfg)?;
        let a = &report.aggregate;
        println!(
            "{id:<28} logloss {:.4}  acc {:.4}  f1_pos {:.4}  misclassified {:>3}  ({:.1?})",
            a.logloss, a.accuracy, a.f1_pos, a.misclassified, report.wall_time
        );
        for (i, m) in report.folds.iter().enumerate().take(3) {
            println!("    fold {i}: n {} acc {:.3} logloss {:.4}", m.n, m.accuracy, m.logloss);
        }
    }
    Ok(())
}
