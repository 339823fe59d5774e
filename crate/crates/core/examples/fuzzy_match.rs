//! Length-dependent fuzzy matching against a BK-tree, compared with a
//! brute-force scan.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toxprep::fuzzy::{best_match, best_match_scan, levenshtein, similarity};
use toxprep::{FuzzyIndex, LexiconSet, MatchPolicy};

fn main() {
    let policy = MatchPolicy::default();
    for len in [4, 10, 24, 25, 40] {
        println!("threshold for length {len:>2}: {:.2}", policy.threshold_for_len(len));
    }
    println!("levenshtein(shyt, shit) = {}, similarity = {:.2}", levenshtein("shyt", "shit"), similarity("shyt", "shit"));

    let lex = LexiconSet::builtin();
    let words: Vec<&str> = lex.common_words.words();
    let index = FuzzyIndex::build(&words);
    for q in ["helo", "beleive", "tomorow", "xyzzy", "recieve"] {
        match best_match(&index, q, &policy) {
            Some(m) => println!("{q:>8} -> {} (sim {:.3}, d {})", m.candidate, m.similarity, m.distance),
            None => println!("{q:>8} -> no match"),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let queries: Vec<String> = (0..2000)
        .map(|_| {
            let mut w: Vec<char> = words[rng.gen_range(0..words.len())].chars().collect();
            let i = rng.gen_range(0..w.len());
            w[i] = rng.gen_range(b'a'..=b'z') as char;
            w.into_iter().collect()
        })
        .collect();
    let t = Instant::now();
    let indexed: Vec<_> = queries.iter().map(|q| best_match(&index, q, &policy)).collect();
    let t_index = t.elapsed();
    let t = Instant::now();
    let scanned: Vec<_> = queries.iter().map(|q| best_match_scan(words.iter().copied(), q, &policy)).collect();
    let t_scan = t.elapsed();
    assert_eq!(indexed, scanned);
    println!("{} queries: index {:?}, scan {:?}, identical results", queries.len(), t_index, t_scan);
}
