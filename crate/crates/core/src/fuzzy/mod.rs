//! Fuzzy word matching.
//!
//! A word matches a candidate when their normalized edit similarity
//! `1 - d / max(len)` reaches a length-dependent threshold
//! `max(1 - len / 50, 0.5)`. Long words therefore tolerate more edits, down
//! to a floor of one edit per two characters.

mod distance;
mod index;
mod obfuscation;

pub use distance::{levenshtein, levenshtein_bounded, levenshtein_chars};
pub use index::FuzzyIndex;
pub use obfuscation::{collapse_runs, strip_trailing_punct, ObfuscationMatcher, ProfanePolicy};

use crate::lexicons::{NameCategory, ProperNameLexicon};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPolicy {
    /// Word length at which the threshold reaches zero before flooring.
    pub length_scale: f64,
    /// Lowest threshold any word can get.
    pub floor: f64,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            length_scale: 50.0,
            floor: 0.5,
        }
    }
}

impl MatchPolicy {
    /// Minimum similarity a candidate needs to match a word of `len` chars.
    pub fn threshold_for_len(&self, len: usize) -> f64 {
        (1.0 - len as f64 / self.length_scale).clamp(self.floor, 1.0)
    }

    pub fn threshold_for(&self, word: &str) -> f64 {
        self.threshold_for_len(word.chars().count())
    }

    /// Largest edit distance any candidate can have and still reach the
    /// threshold for a query of `len` chars. From `d <= (1 - t) * max(len, len_c)`
    /// and `len_c <= len + d`: `d <= (1 - t) * len / t`.
    pub fn max_distance_for_len(&self, len: usize) -> usize {
        let t = self.threshold_for_len(len);
        ((1.0 - t) * len as f64 / t + 1e-9).floor() as usize
    }
}

/// Similarity from a known distance and the two lengths.
pub fn similarity_from_distance(distance: usize, len_a: usize, len_b: usize) -> f64 {
    let longest = len_a.max(len_b);
    if longest == 0 {
        1.0
    } else {
        1.0 - distance as f64 / longest as f64
    }
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)` on case-folded input; two empty
/// strings are fully similar.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().flat_map(char::to_lowercase).collect();
    let b: Vec<char> = b.chars().flat_map(char::to_lowercase).collect();
    similarity_from_distance(levenshtein_chars(&a, &b), a.len(), b.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub candidate: String,
    pub similarity: f64,
    pub distance: usize,
}

/// Ranking: highest similarity, then smallest distance, then lexicographically
/// smallest candidate.
fn better(a: &Match, b: &Match) -> bool {
    match a.similarity.partial_cmp(&b.similarity) {
        Some(std::cmp::Ordering::Greater) => true,
        Some(std::cmp::Ordering::Less) => false,
        _ => (a.distance, &a.candidate) < (b.distance, &b.candidate),
    }
}

fn pick_best(candidates: impl Iterator<Item = Match>) -> Option<Match> {
    candidates.fold(None, |best, m| match best {
        Some(b) if !better(&m, &b) => Some(b),
        _ => Some(m),
    })
}

/// Closest indexed word, if its similarity reaches the threshold for `word`.
pub fn best_match(index: &FuzzyIndex, word: &str, policy: &MatchPolicy) -> Option<Match> {
    let query = word.to_lowercase();
    if index.contains(&query) {
        return Some(Match {
            candidate: query,
            similarity: 1.0,
            distance: 0,
        });
    }
    let q: Vec<char> = query.chars().collect();
    let threshold = policy.threshold_for_len(q.len());
    let radius = policy.max_distance_for_len(q.len());
    pick_best(
        index
            .within_chars(&q, radius)
            .into_iter()
            .map(|(w, d)| Match {
                similarity: similarity_from_distance(d, q.len(), w.chars().count()),
                candidate: w.to_string(),
                distance: d,
            })
            .filter(|m| m.similarity >= threshold),
    )
}

/// Same contract as [`best_match`], by exhaustive scan with the full DP.
pub fn best_match_scan<'a, I>(candidates: I, word: &str, policy: &MatchPolicy) -> Option<Match>
where
    I: IntoIterator<Item = &'a str>,
{
    let query = word.to_lowercase();
    let qlen = query.chars().count();
    let threshold = policy.threshold_for_len(qlen);
    pick_best(
        candidates
            .into_iter()
            .map(|c| {
                let c = c.to_lowercase();
                let d = levenshtein(&query, &c);
                Match {
                    similarity: similarity_from_distance(d, qlen, c.chars().count()),
                    candidate: c,
                    distance: d,
                }
            })
            .filter(|m| m.similarity >= threshold),
    )
}

/// Category of `word` in the merged proper-name lexicon.
pub fn proper_name_check(word: &str, names: &ProperNameLexicon) -> Option<NameCategory> {
    names.category(word)
}
