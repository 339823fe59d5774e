//! Runs every atomic transform on one comment.
//!
//! ```text
//! cargo run --example transform_text -- "I CAN'T believe this s**t, John!! lol"
//! ```

use std::sync::Arc;

use toxprep::corpus::text_frequencies;
use toxprep::lexicons::build_frequent_words;
use toxprep::textops::{TransformContext, TransformName};
use toxprep::{apply_transform, FuzzyIndex, LexiconSet, Tokenizer, TransformSpec};

fn main() -> toxprep::Result<()> {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "I CAN'T   believe this s**t, John!! lol \u{7} runnning dogs went hellooo".into());

    // Frequency-dependent transforms need counts; here they come from the
    // comment itself plus a tiny reference text.
    let reference = ["hello hello running the dogs", text.as_str()];
    let table = text_frequencies(&reference, &Tokenizer::default());
    let mut ctx = TransformContext::with_lexicons(Arc::new(LexiconSet::builtin()));
    ctx.set_frequent_words(Arc::new(FuzzyIndex::build(&build_frequent_words(&table, 1).words)));
    ctx.set_frequencies(Arc::new(table));

    println!("{:<26} {text}", "input");
    for &name in TransformName::ALL {
        let spec = match name {
            TransformName::CommonFuzzy => TransformSpec::new(name).with_param("min_frequency", 1),
            _ => TransformSpec::new(name),
        };
        println!("{:<26} {}", name.as_str(), apply_transform(&text, &spec, &ctx)?);
    }
    Ok(())
}
