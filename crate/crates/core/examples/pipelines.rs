//! Lists the registered pipelines, applies the composite ones to a comment,
//! and round-trips a custom pipeline file.

use std::sync::Arc;

use toxprep::eval::transform_split;
use toxprep::synth::{generate_documents, SynthConfig};
use toxprep::textops::{parse_pipelines, serialize_pipelines, Registry};
use toxprep::{LexiconSet, Tokenizer};

const CUSTOM: &str = "\
# lowercase, expand contractions, then stem
id my-pipeline
stage to_lower
stage replace_contractions
stage stem
";

fn main() -> toxprep::Result<()> {
    let registry = Registry::default();
    println!("{} ids: {}", registry.ids().len(), registry.ids().join(" "));

    let lexicons = Arc::new(LexiconSet::builtin());
    let comment = "Y'all CAN'T be serious, u r sh1t at this, Paris agrees!!";
    println!("\ninput: {comment}");
    // Frequency-based stages (rare-word removal, common-word fuzzing) are fit
    // on a synthetic reference corpus; the comment itself never contributes.
    let reference: Vec<String> = generate_documents(&SynthConfig::default()).into_iter().map(|d| d.text).collect();
    for p in registry.composites() {
        let mut train = reference.clone();
        let mut one = vec![comment.to_string()];
        transform_split(&mut train, &mut one, p, &lexicons, &Tokenizer::default())?;
        println!("{:<36} {}", p.id, one[0]);
    }

    let custom = parse_pipelines(CUSTOM)?;
    let text = serialize_pipelines(&custom);
    assert_eq!(parse_pipelines(&text)?, custom);
    println!("\ncanonical form:\n{text}");
    let extended = Registry::with_composites(custom)?;
    println!("registry with custom composite resolves: {:?}", extended.resolve("my-pipeline")?.map(|p| p.stages.len()));
    Ok(())
}
