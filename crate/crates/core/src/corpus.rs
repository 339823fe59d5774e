//! Corpus ingestion and vocabulary statistics.
//!
//! The input is the Jigsaw training CSV: one comment per row with six binary
//! toxicity flags. Rows are collapsed to a single `abusive` label (1 if any
//! flag is set). Comments may span several lines inside quotes, and invalid
//! UTF-8 is replaced rather than rejected.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textops::Tokenizer;

/// Column layout of the Jigsaw training file.
pub const EXPECTED_COLUMNS: [&str; 8] = [
    "id",
    "comment_text",
    "toxic",
    "severe_toxic",
    "obscene",
    "threat",
    "insult",
    "identity_hate",
];

/// One source row before label collapse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    /// toxic, severe_toxic, obscene, threat, insult, identity_hate
    pub flags: [bool; 6],
}

impl RawRecord {
    pub fn to_document(&self) -> Document {
        Document {
            id: self.id.clone(),
            text: self.text.clone(),
            label: binarize(&self.flags),
        }
    }
}

/// A comment with its binary label (1 = abusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: u8,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: u8) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label: label.min(1),
        }
    }

    pub fn tokens(&self, tokenizer: &Tokenizer) -> Vec<String> {
        tokenizer.tokenize(&self.text)
    }
}

/// A comment is abusive iff at least one of its six flags is set.
pub fn binarize(flags: &[bool; 6]) -> u8 {
    u8::from(flags.iter().any(|&f| f))
}

/// Reads every row of a Jigsaw-format CSV.
pub fn read_records<R: Read>(reader: R, limit: Option<usize>) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let header = rdr.byte_headers().map_err(|e| Error::CsvRow {
        row: 0,
        message: e.to_string(),
    })?;
    let found: Vec<String> = header
        .iter()
        .map(|f| String::from_utf8_lossy(f).trim_start_matches('\u{feff}').to_string())
        .collect();
    if found.len() != EXPECTED_COLUMNS.len() || found.iter().zip(EXPECTED_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::CsvHeader {
            found,
            expected: EXPECTED_COLUMNS.to_vec(),
        });
    }

    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    let mut row: u64 = 0;
    loop {
        if limit.is_some_and(|n| out.len() >= n) {
            break;
        }
        row += 1;
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(Error::CsvRow {
                    row,
                    message: e.to_string(),
                })
            }
        }
        let id = String::from_utf8_lossy(&record[0]).into_owned();
        if id.is_empty() {
            return Err(Error::CsvRow {
                row,
                message: "empty id".into(),
            });
        }
        let text = String::from_utf8_lossy(&record[1]).into_owned();
        let mut flags = [false; 6];
        for (k, flag) in flags.iter_mut().enumerate() {
            *flag = match record[k + 2].trim_ascii() {
                b"0" => false,
                b"1" => true,
                other => {
                    return Err(Error::CsvRow {
                        row,
                        message: format!(
                            "column {} must be 0 or 1, got {:?}",
                            EXPECTED_COLUMNS[k + 2],
                            String::from_utf8_lossy(other)
                        ),
                    })
                }
            };
        }
        out.push(RawRecord { id, text, flags });
    }
    Ok(out)
}

/// Writes records back in the same CSV layout they were read from.
pub fn write_records<W: Write>(writer: W, records: &[RawRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    wtr.write_record(EXPECTED_COLUMNS).map_err(ser)?;
    for r in records {
        let mut fields: Vec<&str> = vec![&r.id, &r.text];
        fields.extend(r.flags.iter().map(|&f| if f { "1" } else { "0" }));
        wtr.write_record(&fields).map_err(ser)?;
    }
    wtr.flush().map_err(|e| Error::Serde(e.to_string()))?;
    Ok(())
}

/// Loads a Jigsaw-format CSV as labeled documents, in file order.
///
/// With `limit`, only the first `limit` rows are read.
pub fn load_corpus(path: impl AsRef<Path>, limit: Option<usize>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let records = read_records(std::io::BufReader::new(file), limit)?;
    Ok(records.iter().map(RawRecord::to_document).collect())
}

/// Whole-corpus token counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total_tokens: u64,
}

impl FrequencyTable {
    pub fn from_counts(counts: HashMap<String, u64>) -> Self {
        let counts: HashMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let total_tokens = counts.values().sum();
        FrequencyTable {
            counts,
            total_tokens,
        }
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &HashMap<String, u64> {
        &self.counts
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn merge(mut self, other: FrequencyTable) -> Self {
        for (w, c) in other.counts {
            *self.counts.entry(w).or_insert(0) += c;
        }
        self.total_tokens += other.total_tokens;
        self
    }

    fn add_tokens<I: IntoIterator<Item = String>>(&mut self, tokens: I) {
        for t in tokens {
            *self.counts.entry(t).or_insert(0) += 1;
            self.total_tokens += 1;
        }
    }
}

const CHUNK: usize = 2048;

/// Counts tokens over all texts. Chunks are counted in parallel and merged;
/// the result equals sequential aggregation.
pub fn text_frequencies<S: AsRef<str> + Sync>(texts: &[S], tokenizer: &Tokenizer) -> FrequencyTable {
    texts
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut t = FrequencyTable::default();
            for text in chunk {
                t.add_tokens(tokenizer.tokenize(text.as_ref()));
            }
            t
        })
        .reduce(FrequencyTable::default, FrequencyTable::merge)
}

pub fn word_frequencies(docs: &[Document], tokenizer: &Tokenizer) -> FrequencyTable {
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    text_frequencies(&texts, tokenizer)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySummary {
    pub singleton_fraction: f64,
    pub le5_fraction: f64,
    pub vocab_size: usize,
    pub total_tokens: u64,
    pub top_k: Vec<WordCount>,
}

/// Fractions of distinct words seen once and at most five times, plus the
/// `k` most frequent words (ties broken alphabetically).
pub fn frequency_stats(table: &FrequencyTable, k: usize) -> FrequencySummary {
    let vocab = table.vocab_size();
    let (mut ones, mut le5) = (0usize, 0usize);
    for &c in table.counts.values() {
        if c == 1 {
            ones += 1;
        }
        if c <= 5 {
            le5 += 1;
        }
    }
    let frac = |n: usize| if vocab == 0 { 0.0 } else { n as f64 / vocab as f64 };

    let mut all: Vec<(&String, &u64)> = table.counts.iter().collect();
    all.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let top_k = all
        .into_iter()
        .take(k)
        .map(|(w, c)| WordCount {
            word: w.clone(),
            count: *c,
        })
        .collect();

    FrequencySummary {
        singleton_fraction: frac(ones),
        le5_fraction: frac(le5),
        vocab_size: vocab,
        total_tokens: table.total_tokens,
        top_k,
    }
}

/// Count-of-counts: occurrence count → number of distinct words with it.
pub fn count_histogram(table: &FrequencyTable) -> BTreeMap<u64, u64> {
    let mut h = BTreeMap::new();
    for &c in table.counts.values() {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,comment_text,toxic,severe_toxic,obscene,threat,insult,identity_hate\n";

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(i.to_string(), *t, 0))
            .collect()
    }

    #[test]
    fn binarize_all_64_combinations() {
        for bits in 0u8..64 {
            let flags: [bool; 6] = std::array::from_fn(|k| bits & (1 << k) != 0);
            assert_eq!(binarize(&flags), u8::from(bits != 0), "bits {bits:06b}");
        }
    }

    #[test]
    fn reads_labels_and_multiline_fields() {
        let csv = format!(
            "{HEADER}a1,\"hello\nworld\",0,0,0,0,0,0\na2,\"you \"\"idiot\"\"\",0,0,1,0,0,0\n"
        );
        let recs = read_records(csv.as_bytes(), None).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].text, "hello\nworld");
        assert_eq!(recs[0].to_document().label, 0);
        assert_eq!(recs[1].text, "you \"idiot\"");
        assert_eq!(recs[1].to_document().label, 1);
    }

    #[test]
    fn limit_takes_prefix() {
        let csv = format!("{HEADER}a,x,0,0,0,0,0,0\nb,y,1,0,0,0,0,0\nc,z,0,0,0,0,0,0\n");
        let recs = read_records(csv.as_bytes(), Some(2)).unwrap();
        assert_eq!(recs.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn bad_header_lists_expected_columns() {
        let err = read_records("id,text,label\n1,x,0\n".as_bytes(), None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("identity_hate"), "{msg}");
    }

    #[test]
    fn bad_row_names_row_number() {
        let csv = format!("{HEADER}a,x,0,0,0,0,0,0\nb,y,0,0,2,0,0,0\n");
        match read_records(csv.as_bytes(), None).unwrap_err() {
            Error::CsvRow { row, .. } => assert_eq!(row, 2),
            e => panic!("unexpected {e}"),
        }
        let csv = format!("{HEADER}a,x,0,0,0\n");
        assert!(matches!(
            read_records(csv.as_bytes(), None).unwrap_err(),
            Error::CsvRow { row: 1, .. }
        ));
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let mut bytes = HEADER.as_bytes().to_vec();
        bytes.extend_from_slice(b"a,caf\xe9,0,0,0,0,0,0\n");
        let recs = read_records(&bytes[..], None).unwrap();
        assert_eq!(recs[0].text, "caf\u{fffd}");
    }

    #[test]
    fn empty_text_is_allowed() {
        let csv = format!("{HEADER}a,,0,0,0,0,0,0\n");
        let recs = read_records(csv.as_bytes(), None).unwrap();
        assert_eq!(recs[0].text, "");
    }

    #[test]
    fn round_trip_text() {
        let recs = vec![
            RawRecord {
                id: "x".into(),
                text: "line one\nline \"two\", with comma".into(),
                flags: [false, false, true, false, false, true],
            },
            RawRecord {
                id: "y".into(),
                text: String::new(),
                flags: [false; 6],
            },
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert_eq!(read_records(&buf[..], None).unwrap(), recs);
    }

    #[test]
    fn direct_counts() {
        let t = word_frequencies(&docs(&["a b a"]), &Tokenizer::default());
        assert_eq!(t.count("a"), 2);
        assert_eq!(t.count("b"), 1);
        assert_eq!(t.total_tokens(), 3);
        assert_eq!(t.vocab_size(), 2);
    }

    #[test]
    fn empty_doc_gives_empty_table() {
        let t = word_frequencies(&docs(&[""]), &Tokenizer::default());
        assert!(t.is_empty());
        assert_eq!(t.total_tokens(), 0);
        let s = frequency_stats(&t, 5);
        assert_eq!(s.singleton_fraction, 0.0);
    }

    #[test]
    fn stats_fractions() {
        let t = FrequencyTable::from_counts(HashMap::from([("a".into(), 2), ("b".into(), 1)]));
        assert_eq!(frequency_stats(&t, 10).singleton_fraction, 0.5);
        let t = FrequencyTable::from_counts(HashMap::from([("a".into(), 1), ("b".into(), 1)]));
        let s = frequency_stats(&t, 10);
        assert_eq!(s.singleton_fraction, 1.0);
        assert_eq!(s.le5_fraction, 1.0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let texts: Vec<String> = (0..5000).map(|i| format!("w{} w{} common", i % 37, i % 101)).collect();
        let tok = Tokenizer::default();
        let par = text_frequencies(&texts, &tok);
        let mut seq = FrequencyTable::default();
        for t in &texts {
            seq.add_tokens(tok.tokenize(t));
        }
        assert_eq!(par, seq);
    }

    #[test]
    fn histogram_counts_words_per_count() {
        let t = FrequencyTable::from_counts(HashMap::from([
            ("a".into(), 1),
            ("b".into(), 1),
            ("c".into(), 3),
        ]));
        assert_eq!(count_histogram(&t), BTreeMap::from([(1, 2), (3, 1)]));
    }
}
