//! Blacklist matching for obfuscated profanity.
//!
//! Three attempts, first hit wins:
//! 1. structural: `*` wildcards and leet substitutes aligned against each
//!    blacklist word;
//! 2. repeated-character collapse (`shiiiit` → `shit`) followed by exact or
//!    structural lookup;
//! 3. edit distance against the blacklist, rejected for words on the guard
//!    list so that common words like `ship` stay intact.

use std::collections::{BTreeMap, HashSet};

use super::distance::levenshtein_bounded;
use super::{similarity_from_distance, FuzzyIndex};
use crate::lexicons::{LeetMap, LexiconSet};

/// Acceptance rule for the edit-distance stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfanePolicy {
    pub min_similarity: f64,
    pub max_distance: usize,
    /// Length difference a single `*` run may absorb.
    pub max_absorb: usize,
}

impl Default for ProfanePolicy {
    fn default() -> Self {
        ProfanePolicy {
            min_similarity: 0.75,
            max_distance: 2,
            max_absorb: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObfuscationMatcher {
    /// Canonical words, case-folded and sorted.
    blacklist: Vec<(String, Vec<char>)>,
    collapsed: BTreeMap<String, String>,
    index: FuzzyIndex,
    leet: LeetMap,
    guard: HashSet<String>,
    policy: ProfanePolicy,
}

enum Elem {
    Lit(char),
    Star(usize),
}

/// Collapses every run of a repeated character to one occurrence.
pub fn collapse_runs(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    let mut last = None;
    for c in word.chars() {
        if Some(c) != last {
            out.push(c);
        }
        last = Some(c);
    }
    out
}

/// Drops trailing characters that are neither alphanumeric nor `*`
/// (emoticons like `:)`, closing punctuation).
pub fn strip_trailing_punct(word: &str) -> &str {
    word.trim_end_matches(|c: char| !c.is_alphanumeric() && c != '*')
}

impl ObfuscationMatcher {
    pub fn new<I, S>(blacklist: I, leet: LeetMap, guard: HashSet<String>, policy: ProfanePolicy) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: std::collections::BTreeSet<String> =
            blacklist.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        let mut collapsed = BTreeMap::new();
        for w in &words {
            collapsed.entry(collapse_runs(w)).or_insert_with(|| w.clone());
        }
        ObfuscationMatcher {
            index: FuzzyIndex::build(&words),
            blacklist: words.into_iter().map(|w| {
                let chars = w.chars().collect();
                (w, chars)
            }).collect(),
            collapsed,
            leet,
            guard: guard.into_iter().map(|w| w.to_lowercase()).collect(),
            policy,
        }
    }

    /// Matcher over the set's blacklist and leet map, guarded by its
    /// common-word list plus any `extra_guard` words.
    pub fn from_lexicons<'a>(lex: &LexiconSet, extra_guard: impl IntoIterator<Item = &'a str>) -> Self {
        let mut guard: HashSet<String> = lex.common_words.words().into_iter().map(str::to_string).collect();
        guard.extend(extra_guard.into_iter().map(str::to_lowercase));
        Self::new(lex.blacklist.words(), lex.leet.clone(), guard, ProfanePolicy::default())
    }

    pub fn blacklist(&self) -> impl Iterator<Item = &str> {
        self.blacklist.iter().map(|(w, _)| w.as_str())
    }

    pub fn is_guarded(&self, word: &str) -> bool {
        self.guard.contains(&word.to_lowercase())
    }

    pub fn policy(&self) -> &ProfanePolicy {
        &self.policy
    }

    fn literal_matches(&self, token_char: char, letter: char) -> bool {
        token_char == letter || self.leet.substitutes(token_char, letter)
    }

    fn aligns(&self, token: &[Elem], word: &[char]) -> bool {
        // reach[j]: the consumed token prefix can end at word position j.
        let mut reach = vec![false; word.len() + 1];
        reach[0] = true;
        for elem in token {
            let mut next = vec![false; word.len() + 1];
            for j in (0..=word.len()).filter(|&j| reach[j]) {
                match *elem {
                    Elem::Lit(c) => {
                        if j < word.len() && self.literal_matches(c, word[j]) {
                            next[j + 1] = true;
                        }
                    }
                    Elem::Star(k) => {
                        let lo = k.saturating_sub(self.policy.max_absorb).max(1);
                        let hi = k + self.policy.max_absorb;
                        for m in lo..=hi {
                            if j + m <= word.len() {
                                next[j + m] = true;
                            }
                        }
                    }
                }
            }
            reach = next;
        }
        reach[word.len()]
    }

    fn parse(token: &str) -> Option<(Vec<Elem>, usize)> {
        let mut elems = Vec::new();
        let mut literals = 0;
        let mut len = 0;
        for c in token.chars() {
            len += 1;
            if c == '*' {
                match elems.last_mut() {
                    Some(Elem::Star(k)) => *k += 1,
                    _ => elems.push(Elem::Star(1)),
                }
            } else {
                literals += 1;
                elems.push(Elem::Lit(c));
            }
        }
        (literals > 0).then_some((elems, len))
    }

    fn structural(&self, token: &str) -> Option<&str> {
        let (elems, len) = Self::parse(token)?;
        self.blacklist
            .iter()
            .filter(|(_, w)| len.abs_diff(w.len()) <= self.policy.max_absorb)
            .find(|(_, w)| self.aligns(&elems, w))
            .map(|(w, _)| w.as_str())
    }

    /// Structural match of `token` against the blacklist: each character
    /// must equal the blacklist character, be a leet substitute for it, or
    /// be `*`; a run of `*` may also absorb up to two extra or missing
    /// characters. Trailing punctuation is retried stripped.
    pub fn wildcard_match(&self, token: &str) -> Option<&str> {
        let folded = token.to_lowercase();
        if let Some(w) = self.structural(&folded) {
            return Some(w);
        }
        let stripped = strip_trailing_punct(&folded);
        if stripped.len() != folded.len() {
            return self.structural(stripped);
        }
        None
    }

    /// Wildcard match, retried on the run-collapsed form. This is the
    /// blacklist pattern stage without any edit-distance fallback.
    pub fn pattern_match(&self, token: &str) -> Option<&str> {
        if let Some(w) = self.wildcard_match(token) {
            return Some(w);
        }
        let folded = token.to_lowercase();
        let base = strip_trailing_punct(&folded);
        let collapsed = collapse_runs(base);
        if collapsed == base || self.is_guarded(base) {
            return None;
        }
        if let Some(w) = self.collapsed.get(&collapsed) {
            return Some(w.as_str());
        }
        self.structural(&collapsed)
    }

    /// Canonical blacklist word that `token` is an obfuscation of.
    pub fn profane_match(&self, token: &str) -> Option<&str> {
        if let Some(w) = self.pattern_match(token) {
            return Some(w);
        }
        let folded = token.to_lowercase();
        let base = strip_trailing_punct(&folded);
        if base.is_empty() || self.is_guarded(base) || self.is_guarded(&folded) {
            return None;
        }
        let collapsed = collapse_runs(base);
        let mut best: Option<(f64, usize, &str)> = None;
        for form in [base, collapsed.as_str()] {
            let q: Vec<char> = form.chars().collect();
            for (w, _) in &self.blacklist {
                let wc: Vec<char> = w.chars().collect();
                let Some(d) = levenshtein_bounded(&q, &wc, self.policy.max_distance) else {
                    continue;
                };
                let s = similarity_from_distance(d, q.len(), wc.len());
                if s < self.policy.min_similarity {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bs, bd, bw)) => s > bs || (s == bs && (d, w.as_str()) < (bd, bw)),
                };
                if better {
                    best = Some((s, d, w.as_str()));
                }
            }
        }
        best.map(|(_, _, w)| w)
    }

    pub fn index(&self) -> &FuzzyIndex {
        &self.index
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matcher() -> ObfuscationMatcher {
        ObfuscationMatcher::from_lexicons(&LexiconSet::builtin(), [])
    }

    #[test]
    fn collapse() {
        assert_eq!(collapse_runs("shiiiiiiiiiiiit"), "shit");
        assert_eq!(collapse_runs("aabbaa"), "aba");
        assert_eq!(collapse_runs(""), "");
    }

    #[test]
    fn wildcard_examples() {
        let m = matcher();
        assert_eq!(m.wildcard_match("s**t"), Some("shit"));
        assert_eq!(m.wildcard_match("S***T"), Some("shit"));
        assert_eq!(m.wildcard_match("sh**"), Some("shit"));
        assert_eq!(m.wildcard_match("shi*"), Some("shit"));
        assert_eq!(m.wildcard_match("s*it:)"), Some("shit"));
        assert_eq!(m.wildcard_match("$h1+"), Some("shit"));
        assert_eq!(m.wildcard_match("star"), None);
        assert_eq!(m.wildcard_match("****"), None);
    }

    #[test]
    fn leet_and_runs() {
        let m = matcher();
        assert_eq!(m.profane_match("5h1t"), Some("shit"));
        assert_eq!(m.profane_match("$hit"), Some("shit"));
        assert_eq!(m.profane_match("SHYT"), Some("shit"));
        assert_eq!(m.profane_match("shiiiiiiiiiiiit"), Some("shit"));
        assert_eq!(m.profane_match("$hiiiit"), Some("shit"));
        assert_eq!(m.profane_match("asssss"), Some("ass"));
    }

    #[test]
    fn fuzzy_stage() {
        let m = matcher();
        assert_eq!(m.profane_match("SHUIT"), Some("shit"));
        assert_eq!(m.profane_match("SHIZZ"), Some("shit"));
        assert_eq!(m.profane_match("SHITV"), Some("shit"));
    }

    #[test]
    fn guard_blocks_common_words() {
        let m = matcher();
        for w in ["ship", "shot", "shift", "hit", "as", "pass", "bass", "duck", "count", "the", "hello"] {
            assert_eq!(m.profane_match(w), None, "{w}");
        }
    }

    #[test]
    fn unguarded_matcher_would_collide() {
        let lex = LexiconSet::builtin();
        let m = ObfuscationMatcher::new(["shit"], lex.leet.clone(), HashSet::new(), ProfanePolicy::default());
        assert_eq!(m.profane_match("ship"), Some("shit"));
    }

    #[test]
    fn every_blacklist_word_matches_itself() {
        let m = matcher();
        let words: Vec<String> = m.blacklist().map(str::to_string).collect();
        for w in words {
            assert_eq!(m.wildcard_match(&w), Some(w.as_str()));
            assert_eq!(m.profane_match(&w.to_uppercase()), Some(w.as_str()));
        }
    }

    proptest! {
        #[test]
        fn case_invariant(token in "[a-zA-Z$*1@5+]{1,8}") {
            let m = matcher();
            prop_assert_eq!(m.profane_match(&token), m.profane_match(&token.to_lowercase()));
            prop_assert_eq!(m.profane_match(&token), m.profane_match(&token.to_uppercase()));
        }
    }
}
