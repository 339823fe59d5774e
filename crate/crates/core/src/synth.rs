//! Seeded generator of toxic-comment-like corpora in the Jigsaw CSV layout.
//!
//! Word frequencies follow a Zipf-like law over a vocabulary made of common
//! English words plus pronounceable pseudo-words, so that most word types
//! are rare. Abusive comments carry blacklist words, often obfuscated with
//! stars, leetspeak, letter repetition or trailing emoticons; clean comments
//! occasionally carry a mild one. Comments also contain contractions, chat
//! acronyms, capitalization, names and stray control characters so that
//! every transform has something to act on.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, RawRecord};
use crate::lexicons::LexiconSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub positive_rate: f64,
    /// Probability that a profane token is obfuscated.
    pub obfuscation_rate: f64,
    /// Number of pseudo-words added to the common-word vocabulary.
    pub pseudo_words: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 2000,
            positive_rate: 0.1,
            obfuscation_rate: 0.6,
            pseudo_words: 6000,
            seed: 7,
        }
    }
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br", "cl", "dr",
    "fl", "gr", "pl", "st", "tr", "sh", "ch", "th",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "oo", "ou"];
const CODAS: &[&str] = &["", "", "n", "r", "s", "t", "l", "m", "nd", "st", "ck"];

const NAMES: &[&str] = &["John", "Mary", "London", "Paris", "Canada", "German", "Smith", "David"];
const MILD: &[&str] = &["damn", "crap", "stupid"];
const LEET: &[(char, &str)] = &[
    ('a', "@4"),
    ('s', "$5"),
    ('i', "1!"),
    ('e', "3"),
    ('o', "0"),
    ('t', "+7"),
    ('b', "8"),
    ('g', "9"),
];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(1..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(NUCLEI.choose(rng).unwrap());
    }
    w.push_str(CODAS.choose(rng).unwrap());
    w
}

/// `n` distinct pronounceable pseudo-words, sorted.
pub fn pseudo_words(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = std::collections::BTreeSet::new();
    while words.len() < n {
        words.insert(pseudo_word(&mut rng));
    }
    words.into_iter().collect()
}

/// One obfuscated spelling of `word`.
pub fn obfuscate(word: &str, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    match rng.gen_range(0..6) {
        // interior stars
        0 if n >= 3 => {
            let start = rng.gen_range(1..n - 1);
            let end = rng.gen_range(start + 1..n);
            chars
                .iter()
                .enumerate()
                .map(|(i, &c)| if (start..end).contains(&i) { '*' } else { c })
                .collect()
        }
        // leetspeak
        1 => {
            let out: String = chars
                .iter()
                .map(|&c| match LEET.iter().find(|(l, _)| *l == c) {
                    Some((_, subs)) if rng.gen_bool(0.7) => subs.chars().nth(rng.gen_range(0..subs.chars().count())).unwrap(),
                    _ => c,
                })
                .collect();
            out
        }
        // repeated vowel
        2 => {
            let mut out = String::new();
            for &c in &chars {
                out.push(c);
                if "aeiou".contains(c) {
                    for _ in 0..rng.gen_range(1..6) {
                        out.push(c);
                    }
                }
            }
            out
        }
        // shouting or mixed case
        3 => chars
            .iter()
            .map(|c| if rng.gen_bool(0.7) { c.to_ascii_uppercase() } else { *c })
            .collect(),
        // trailing emoticon or punctuation
        4 => format!("{word}{}", [":)", "!!", "!!!", "?!", ":P"].choose(rng).unwrap()),
        _ => {
            let mut out: Vec<char> = chars.clone();
            let i = rng.gen_range(0..n);
            out[i] = '*';
            out.into_iter().collect()
        }
    }
}

struct Vocab {
    words: Vec<String>,
    dist: WeightedIndex<f64>,
}

impl Vocab {
    fn new(lex: &LexiconSet, pseudo: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut words: Vec<String> = lex
            .common_words
            .words()
            .into_iter()
            .filter(|w| !lex.blacklist.contains(w))
            .map(str::to_string)
            .collect();
        words.shuffle(rng);
        words.extend((0..pseudo).map(|_| pseudo_word(rng)));
        // Zipf with exponent 1 over rank.
        let dist = WeightedIndex::new((0..words.len()).map(|r| 1.0 / (r as f64 + 2.7))).expect("non-empty vocabulary");
        Vocab { words, dist }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &str {
        &self.words[self.dist.sample(rng)]
    }
}

/// Generates `cfg.n_docs` records with ids `s000000`, `s000001`, ...
pub fn generate(cfg: &SynthConfig) -> Vec<RawRecord> {
    let lex = LexiconSet::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = Vocab::new(&lex, cfg.pseudo_words, &mut rng);
    let profane: Vec<&str> = lex.blacklist.words();
    let contractions: Vec<&str> = lex.contractions.words();
    let acronyms: Vec<&str> = lex.acronyms.words();

    (0..cfg.n_docs)
        .map(|i| {
            let abusive = rng.gen_bool(cfg.positive_rate);
            let len = rng.gen_range(4..40);
            let mut tokens: Vec<String> = (0..len).map(|_| vocab.sample(&mut rng).to_string()).collect();
            let insert = |tok: String, rng: &mut ChaCha8Rng, tokens: &mut Vec<String>| {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, tok);
            };
            if abusive {
                for _ in 0..rng.gen_range(1..=3) {
                    let w = *profane.choose(&mut rng).unwrap();
                    let tok = if rng.gen_bool(cfg.obfuscation_rate) {
                        obfuscate(w, &mut rng)
                    } else {
                        w.to_string()
                    };
                    insert(tok, &mut rng, &mut tokens);
                }
            } else if rng.gen_bool(0.05) {
                insert(MILD.choose(&mut rng).unwrap().to_string(), &mut rng, &mut tokens);
            }
            if rng.gen_bool(0.3) {
                insert(contractions.choose(&mut rng).unwrap().to_string(), &mut rng, &mut tokens);
            }
            if rng.gen_bool(0.15) {
                insert(acronyms.choose(&mut rng).unwrap().to_string(), &mut rng, &mut tokens);
            }
            if rng.gen_bool(0.2) {
                insert(NAMES.choose(&mut rng).unwrap().to_string(), &mut rng, &mut tokens);
            }
            if let Some(first) = tokens.first_mut() {
                let mut c = first.chars();
                if let Some(h) = c.next() {
                    *first = h.to_uppercase().chain(c).collect();
                }
            }
            let mut text = String::new();
            for (j, t) in tokens.iter().enumerate() {
                if j > 0 {
                    text.push_str(if rng.gen_bool(0.03) { "  " } else { " " });
                    if rng.gen_bool(0.01) {
                        text.push('\n');
                    }
                }
                text.push_str(t);
            }
            text.push_str([".", ".", "!", "?", ""].choose(&mut rng).unwrap());
            if rng.gen_bool(0.02) {
                text.push('\u{7}');
            }
            let mut flags = [false; 6];
            if abusive {
                flags[0] = true;
                for f in flags.iter_mut().skip(1) {
                    *f = rng.gen_bool(0.3);
                }
            }
            RawRecord {
                id: format!("s{i:06}"),
                text,
                flags,
            }
        })
        .collect()
}

pub fn generate_documents(cfg: &SynthConfig) -> Vec<Document> {
    generate(cfg).iter().map(RawRecord::to_document).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{read_records, write_records};

    #[test]
    fn deterministic_and_labelled() {
        let cfg = SynthConfig {
            n_docs: 500,
            ..SynthConfig::default()
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        let pos = a.iter().filter(|r| r.flags[0]).count();
        assert!((20..=80).contains(&pos), "{pos}");
        assert!(a.iter().all(|r| !r.text.is_empty()));
    }

    #[test]
    fn csv_round_trip() {
        let recs = generate(&SynthConfig {
            n_docs: 50,
            ..SynthConfig::default()
        });
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert_eq!(read_records(&buf[..], None).unwrap(), recs);
    }

    #[test]
    fn pseudo_words_distinct() {
        let w = pseudo_words(3000, 1);
        assert_eq!(w.len(), 3000);
        assert!(w.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn obfuscations_differ_from_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let changed = (0..100).filter(|_| obfuscate("shit", &mut rng) != "shit").count();
        assert!(changed > 80);
    }
}
