//! Writes a seeded synthetic corpus in the Jigsaw CSV layout.
//!
//! ```text
//! cargo run --example synth_corpus -- out.csv 2000 7
//! ```

use std::fs::File;

use toxprep::corpus::write_records;
use toxprep::synth::{generate, SynthConfig};

fn main() -> toxprep::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "synthetic.csv".into());
    let n_docs = args.next().map(|s| s.parse().expect("document count")).unwrap_or(2000);
    let seed = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);

    let records = generate(&SynthConfig { n_docs, seed, ..SynthConfig::default() });
    let file = File::create(&path).map_err(|e| toxprep::Error::Io { path: path.clone().into(), source: e })?;
    write_records(file, &records)?;
    let abusive = records.iter().filter(|r| r.to_document().label == 1).count();
    println!("wrote {n_docs} documents ({abusive} abusive) to {path}");
    Ok(())
}
