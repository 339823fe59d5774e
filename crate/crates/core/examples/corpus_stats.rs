//! Vocabulary statistics for a corpus: singleton and rare-word fractions,
//! top words and the count-of-counts histogram.
//!
//! ```text
//! cargo run --example corpus_stats -- [train.csv]
//! ```
//! Without an argument a synthetic corpus is used.

use toxprep::corpus::{count_histogram, frequency_stats};
use toxprep::lexicons::build_frequent_words;
use toxprep::synth::{generate_documents, SynthConfig};
use toxprep::{load_corpus, word_frequencies, Tokenizer};

fn main() -> toxprep::Result<()> {
    let docs = match std::env::args().nth(1) {
        Some(path) => load_corpus(path, None)?,
        None => generate_documents(&SynthConfig::default()),
    };
    let abusive = docs.iter().filter(|d| d.label == 1).count();
    println!("{} documents, {abusive} abusive", docs.len());

    let table = word_frequencies(&docs, &Tokenizer::default());
    let stats = frequency_stats(&table, 10);
    println!("vocabulary {} types / {} tokens", stats.vocab_size, stats.total_tokens);
    println!("singleton fraction {:.3}", stats.singleton_fraction);
    println!("<=5 occurrences    {:.3}", stats.le5_fraction);
    for wc in &stats.top_k {
        println!("  {:>8}  {}", wc.count, wc.word);
    }

    println!("occurrence_count,num_words");
    for (count, words) in count_histogram(&table).into_iter().take(10) {
        println!("{count},{words}");
    }
    println!("frequent words (count > 100): {}", build_frequent_words(&table, 100).len());
    Ok(())
}
