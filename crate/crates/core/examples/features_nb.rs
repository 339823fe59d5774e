//! Builds a uni+bigram vocabulary, vectorizes documents and computes NB
//! log-count ratios.

use toxprep::features::{build_vocabulary, nb_ratios, scale, vectorize};
use toxprep::textops::tokenize;

fn main() -> toxprep::Result<()> {
    let docs = [
        ("you are an idiot", 1),
        ("what an idiot you are", 1),
        ("you are right", 0),
        ("thanks you are kind", 0),
        ("you are kind and right", 0),
    ];
    let tokens: Vec<Vec<String>> = docs.iter().map(|(t, _)| tokenize(t)).collect();
    let labels: Vec<u8> = docs.iter().map(|d| d.1).collect();
    let vocab = build_vocabulary(&tokens, (1, 2), 2)?;
    print!("vocabulary (term, column, df):\n{}", vocab.dump());

    let x: Vec<_> = tokens.iter().map(|t| vectorize(t, &vocab)).collect();
    let r = nb_ratios(&x, &labels, vocab.len(), 1.0)?;
    for (j, v) in r.r.iter().enumerate() {
        println!("r[{:<8}] = {v:+.4}", vocab.term(j));
    }
    println!("scaled first doc: {:?}", scale(&x[0], &r).entries());
    println!("unseen doc: {:?}", vectorize(&tokenize("zebra crossing"), &vocab).entries());
    Ok(())
}
