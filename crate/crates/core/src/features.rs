//! Bag-of-n-grams features and naive-Bayes log-count ratios.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Joins the tokens of an n-gram into one vocabulary key.
pub const NGRAM_JOIN: &str = "_";

/// Sorted `(column, value)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from pairs with strictly increasing indices and finite values.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument("sparse indices must be strictly increasing".into()));
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument("sparse values must be finite".into()));
        }
        Ok(SparseVector { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, v)| v * dense[j]).sum()
    }

    /// Largest index + 1, or 0 when empty.
    pub fn dim_hint(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0 + 1)
    }
}

fn ngrams(tokens: &[String], lo: usize, hi: usize) -> impl Iterator<Item = String> + '_ {
    (lo..=hi).flat_map(move |n| tokens.windows(n).map(|w| w.join(NGRAM_JOIN)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    terms: HashMap<String, usize>,
    /// Terms by column, with document frequency.
    columns: Vec<(String, usize)>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.get(term).copied()
    }

    pub fn term(&self, column: usize) -> &str {
        &self.columns[column].0
    }

    /// `term<TAB>index<TAB>doc_freq`, one line per column.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, (t, df)) in self.columns.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{i}\t{df}");
        }
        out
    }
}

/// Collects every n-gram (`lo..=hi`) that occurs in at least `min_df`
/// training documents. Columns follow sorted term order.
pub fn build_vocabulary(train_docs: &[Vec<String>], ngram_range: (usize, usize), min_df: usize) -> Result<Vocabulary> {
    let (lo, hi) = ngram_range;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidArgument(format!("invalid n-gram range {ngram_range:?}")));
    }
    if train_docs.is_empty() {
        return Err(Error::InvalidArgument("no training documents".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in train_docs {
        let seen: HashSet<String> = ngrams(doc, lo, hi).collect();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let columns: Vec<(String, usize)> = df.into_iter().filter(|(_, n)| *n >= min_df).collect();
    if columns.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    let terms = columns.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
    Ok(Vocabulary {
        ngram_range,
        min_df,
        terms,
        columns,
    })
}

/// Binary presence vector over the vocabulary; unknown n-grams are ignored.
pub fn vectorize(doc: &[String], vocab: &Vocabulary) -> SparseVector {
    let (lo, hi) = vocab.ngram_range;
    let mut idx: Vec<usize> = ngrams(doc, lo, hi).filter_map(|t| vocab.index_of(&t)).collect();
    idx.sort_unstable();
    idx.dedup();
    SparseVector {
        entries: idx.into_iter().map(|j| (j, 1.0)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogCountRatio {
    pub r: Vec<f64>,
    pub alpha: f64,
}

/// `r = log((p / |p|_1) / (q / |q|_1))` with `p = alpha + sum of positive
/// rows`, `q = alpha + sum of negative rows`.
pub fn nb_ratios(x: &[SparseVector], y: &[u8], dim: usize, alpha: f64) -> Result<LogCountRatio> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::SingleClass);
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let mut p = vec![alpha; dim];
    let mut q = vec![alpha; dim];
    for (row, &label) in x.iter().zip(y) {
        let acc = if label == 1 { &mut p } else { &mut q };
        for &(j, v) in row.entries() {
            acc[j] += v;
        }
    }
    let p_norm: f64 = p.iter().map(|v| v.abs()).sum();
    let q_norm: f64 = q.iter().map(|v| v.abs()).sum();
    let r = p
        .iter()
        .zip(&q)
        .map(|(pj, qj)| (pj / p_norm).ln() - (qj / q_norm).ln())
        .collect();
    Ok(LogCountRatio { r, alpha })
}

/// Elementwise product `x ∘ r`; zero products are kept as explicit zeros.
pub fn scale(x: &SparseVector, ratios: &LogCountRatio) -> SparseVector {
    SparseVector {
        entries: x.entries.iter().map(|&(j, v)| (j, v * ratios.r[j])).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn sv(idx: &[usize]) -> SparseVector {
        SparseVector::new(idx.iter().map(|&j| (j, 1.0)).collect()).unwrap()
    }

    #[test]
    fn vocabulary_examples() {
        let docs = vec![toks("a b"), toks("a c")];
        let v = build_vocabulary(&docs, (1, 1), 1).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.index_of("a"), Some(0));
        let v = build_vocabulary(&docs, (1, 1), 2).unwrap();
        assert_eq!(v.len(), 1);
        let v = build_vocabulary(&[toks("a b")], (1, 2), 1).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.index_of("a_b").is_some());
        assert_eq!(v.dump(), "a\t0\t1\na_b\t1\t1\nb\t2\t1\n");
    }

    #[test]
    fn empty_vocabulary_errors() {
        let docs = vec![toks("a"), toks("b")];
        assert!(matches!(build_vocabulary(&docs, (1, 1), 2), Err(Error::EmptyVocabulary { .. })));
    }

    #[test]
    fn vectorize_examples() {
        let v = build_vocabulary(&[toks("a b c")], (1, 1), 1).unwrap();
        assert_eq!(vectorize(&toks("a a b"), &v).entries(), &[(0, 1.0), (1, 1.0)]);
        assert!(vectorize(&toks("zz yy"), &v).is_empty());
        assert!(vectorize(&[], &v).is_empty());
    }

    #[test]
    fn nb_hand_example() {
        let r = nb_ratios(&[sv(&[0]), sv(&[])], &[1, 0], 1, 1.0).unwrap();
        assert_eq!(r.r, vec![0.0]);
    }

    #[test]
    fn nb_symmetric_and_sign() {
        // term 0 in one doc of each class; term 1 only in positives.
        let x = [sv(&[0, 1]), sv(&[0])];
        let r = nb_ratios(&x, &[1, 0], 2, 1.0).unwrap();
        // p = [2, 2], q = [2, 1]
        assert_relative_eq!(r.r[0], ((2.0 / 4.0) / (2.0 / 3.0f64)).ln());
        assert!(r.r[1] > 0.0);
        let r = nb_ratios(&[sv(&[0]), sv(&[0])], &[1, 0], 1, 1.0).unwrap();
        assert_eq!(r.r[0], 0.0);
    }

    #[test]
    fn nb_single_class_errors() {
        assert!(matches!(nb_ratios(&[sv(&[0])], &[1], 1, 1.0), Err(Error::SingleClass)));
    }

    #[test]
    fn scale_examples() {
        let r = LogCountRatio { r: vec![2.0, 0.0], alpha: 1.0 };
        assert_eq!(scale(&sv(&[0]), &r).entries(), &[(0, 2.0)]);
        assert!(scale(&sv(&[]), &r).is_empty());
        assert_eq!(scale(&sv(&[1]), &r).entries(), &[(1, 0.0)]);
    }

    #[test]
    fn sparse_vector_invariants() {
        assert!(SparseVector::new(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(vec![(2, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(vec![(0, f64::NAN)]).is_err());
    }

    /// Dense oracle: counts via explicit matrices.
    fn dense_nb(x: &[Vec<f64>], y: &[u8], alpha: f64) -> Vec<f64> {
        let v = x[0].len();
        let mut p = vec![alpha; v];
        let mut q = vec![alpha; v];
        for (row, &l) in x.iter().zip(y) {
            for j in 0..v {
                if l == 1 {
                    p[j] += row[j];
                } else {
                    q[j] += row[j];
                }
            }
        }
        let sp: f64 = p.iter().sum();
        let sq: f64 = q.iter().sum();
        (0..v).map(|j| (p[j] / sp).ln() - (q[j] / sq).ln()).collect()
    }

    proptest! {
        #[test]
        fn nb_matches_dense_oracle_and_negates_on_swap(
            rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 15), 2..10),
            labels_seed in any::<u64>(),
        ) {
            let n = rows.len();
            let mut y: Vec<u8> = (0..n).map(|i| ((labels_seed >> (i % 64)) & 1) as u8).collect();
            y[0] = 1;
            y[1] = 0;
            let dense: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&b| f64::from(u8::from(b))).collect()).collect();
            let sparse: Vec<SparseVector> = rows
                .iter()
                .map(|r| sv(&r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect::<Vec<_>>()))
                .collect();
            let got = nb_ratios(&sparse, &y, 15, 1.0).unwrap();
            let expect = dense_nb(&dense, &y, 1.0);
            for (g, e) in got.r.iter().zip(&expect) {
                prop_assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0));
            }
            let flipped: Vec<u8> = y.iter().map(|l| 1 - l).collect();
            let neg = nb_ratios(&sparse, &flipped, 15, 1.0).unwrap();
            for (a, b) in got.r.iter().zip(&neg.r) {
                prop_assert_eq!(*a, -*b);
            }
        }

        #[test]
        fn vectorizing_never_grows_vocabulary(extra in "[a-z]{1,6}( [a-z]{1,6}){0,5}") {
            let v = build_vocabulary(&[toks("the cat sat"), toks("the dog ran")], (1, 2), 1).unwrap();
            let before = v.clone();
            let x = vectorize(&toks(&extra), &v);
            prop_assert_eq!(&v, &before);
            prop_assert!(x.entries().iter().all(|&(j, _)| j < v.len()));
        }
    }
}
