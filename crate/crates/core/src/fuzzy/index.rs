//! BK-tree over a fixed word set.
//!
//! Child edge `k` of a node holds words at edit distance exactly `k` from the
//! node's word, so a range query of radius `r` around `q` only has to descend
//! into edges `k` with `|k - d(q, node)| <= r`.

use std::collections::BTreeSet;

use super::distance::levenshtein_bounded;

#[derive(Debug, Clone)]
struct Node {
    word: String,
    chars: Vec<char>,
    /// (distance, child node index), sorted by distance.
    children: Vec<(usize, usize)>,
}

impl Node {
    fn max_child_distance(&self) -> usize {
        self.children.last().map_or(0, |c| c.0)
    }
}

#[derive(Debug, Clone)]
pub struct FuzzyIndex {
    nodes: Vec<Node>,
    words: BTreeSet<String>,
}

impl FuzzyIndex {
    /// Builds the tree from case-folded `words`; duplicates collapse.
    /// Insertion follows sorted order so the tree shape is deterministic.
    pub fn build<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        let mut index = FuzzyIndex {
            nodes: Vec::with_capacity(words.len()),
            words: BTreeSet::new(),
        };
        for w in &words {
            index.insert(w);
        }
        index.words = words;
        index
    }

    fn insert(&mut self, word: &str) {
        let chars: Vec<char> = word.chars().collect();
        let new = Node {
            word: word.to_string(),
            chars,
            children: Vec::new(),
        };
        if self.nodes.is_empty() {
            self.nodes.push(new);
            return;
        }
        let mut at = 0;
        loop {
            let d = super::distance::levenshtein_chars(&self.nodes[at].chars, &new.chars);
            if d == 0 {
                return;
            }
            match self.nodes[at].children.binary_search_by_key(&d, |c| c.0) {
                Ok(pos) => at = self.nodes[at].children[pos].1,
                Err(pos) => {
                    let id = self.nodes.len();
                    self.nodes.push(new);
                    self.nodes[at].children.insert(pos, (d, id));
                    return;
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Every indexed word within edit distance `radius` of `query`
    /// (already case-folded), with its distance. Order is unspecified.
    pub fn within(&self, query: &str, radius: usize) -> Vec<(&str, usize)> {
        let q: Vec<char> = query.chars().collect();
        self.within_chars(&q, radius)
    }

    pub(crate) fn within_chars(&self, q: &[char], radius: usize) -> Vec<(&str, usize)> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            let node = &self.nodes[at];
            // Past `radius + max_child` neither the node nor any child can qualify.
            let limit = radius + node.max_child_distance();
            let Some(d) = levenshtein_bounded(q, &node.chars, limit) else {
                continue;
            };
            if d <= radius {
                out.push((node.word.as_str(), d));
            }
            let lo = d.saturating_sub(radius);
            let hi = d + radius;
            let start = node.children.partition_point(|c| c.0 < lo);
            for &(k, child) in &node.children[start..] {
                if k > hi {
                    break;
                }
                stack.push(child);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::distance::levenshtein;
    use proptest::prelude::*;

    #[test]
    fn single_word() {
        let idx = FuzzyIndex::build(["shit"]);
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.within("shit", 0), vec![("shit", 0)]);
    }

    #[test]
    fn duplicates_collapse() {
        let idx = FuzzyIndex::build(["ship", "ship", "SHIP", "shot"]);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.nodes.len(), 2);
    }

    proptest! {
        #[test]
        fn range_query_equals_scan(
            words in proptest::collection::vec("[a-f]{1,8}", 1..60),
            query in "[a-f]{0,9}",
            radius in 0usize..5,
        ) {
            let idx = FuzzyIndex::build(&words);
            let mut got: Vec<(String, usize)> =
                idx.within(&query, radius).into_iter().map(|(w, d)| (w.to_string(), d)).collect();
            got.sort();
            let mut expect: Vec<(String, usize)> = idx
                .words()
                .map(|w| (w.to_string(), levenshtein(&query, w)))
                .filter(|(_, d)| *d <= radius)
                .collect();
            expect.sort();
            prop_assert_eq!(got, expect);
        }
    }
}
