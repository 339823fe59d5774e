//! Word lists and replacement maps.
//!
//! Set files hold one entry per line; map files hold `key<TAB>value` lines.
//! In both, blank lines and lines starting with `#` are ignored. Entries are
//! case-folded on load, except proper names which keep their spelling and
//! are matched case-insensitively.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};

/// Proper-name categories, in lookup priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameCategory {
    Cities,
    Countries,
    Nationalities,
    Ethnicities,
    PersonNames,
}

impl NameCategory {
    pub const ALL: [NameCategory; 5] = [
        NameCategory::Cities,
        NameCategory::Countries,
        NameCategory::Nationalities,
        NameCategory::Ethnicities,
        NameCategory::PersonNames,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NameCategory::Cities => "cities",
            NameCategory::Countries => "countries",
            NameCategory::Nationalities => "nationalities",
            NameCategory::Ethnicities => "ethnicities",
            NameCategory::PersonNames => "person_names",
        }
    }
}

impl fmt::Display for NameCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LexiconKind {
    Blacklist,
    AcronymMap,
    ContractionMap,
    Stopwords,
    ProperNames(NameCategory),
    FrequentWords,
    LemmaMap,
}

impl LexiconKind {
    pub fn is_map(self) -> bool {
        matches!(
            self,
            LexiconKind::AcronymMap | LexiconKind::ContractionMap | LexiconKind::LemmaMap
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entries {
    Set(BTreeSet<String>),
    Map(BTreeMap<String, String>),
    /// Case-folded key → (spelling as given, category).
    Names(BTreeMap<String, (String, NameCategory)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub kind: LexiconKind,
    pub entries: Entries,
    pub source: String,
    /// Entries dropped because they repeated an earlier one after case folding.
    pub duplicates: usize,
}

impl Lexicon {
    pub fn len(&self) -> usize {
        match &self.entries {
            Entries::Set(s) => s.len(),
            Entries::Map(m) => m.len(),
            Entries::Names(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Case-insensitive membership for set and name lexicons; key lookup for maps.
    pub fn contains(&self, word: &str) -> bool {
        let key = word.to_lowercase();
        match &self.entries {
            Entries::Set(s) => s.contains(&key),
            Entries::Map(m) => m.contains_key(&key),
            Entries::Names(m) => m.contains_key(&key),
        }
    }

    pub fn lookup(&self, word: &str) -> Option<&str> {
        match &self.entries {
            Entries::Map(m) => m.get(&word.to_lowercase()).map(String::as_str),
            _ => None,
        }
    }

    pub fn words(&self) -> Vec<&str> {
        match &self.entries {
            Entries::Set(s) => s.iter().map(String::as_str).collect(),
            Entries::Map(m) => m.keys().map(String::as_str).collect(),
            Entries::Names(m) => m.keys().map(String::as_str).collect(),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

/// Parses lexicon text. `source` is used in error messages.
pub fn parse_lexicon(text: &str, source: &str, kind: LexiconKind) -> Result<Lexicon> {
    let err = |line: usize, message: &str| Error::Lexicon {
        path: source.to_string(),
        line,
        message: message.to_string(),
    };
    let mut duplicates = 0;
    let entries = if kind.is_map() {
        let mut map = BTreeMap::new();
        for (n, line) in content_lines(text) {
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| err(n, "expected key<TAB>value"))?;
            let key = key.trim().to_lowercase();
            let value = value.trim().to_lowercase();
            if key.is_empty() {
                return Err(err(n, "empty key"));
            }
            if value.is_empty() {
                return Err(err(n, "empty replacement"));
            }
            if map.contains_key(&key) {
                duplicates += 1;
            } else {
                map.insert(key, value);
            }
        }
        Entries::Map(map)
    } else if let LexiconKind::ProperNames(category) = kind {
        let mut map = BTreeMap::new();
        for (_, line) in content_lines(text) {
            let name = line.trim().to_string();
            let key = name.to_lowercase();
            if map.contains_key(&key) {
                duplicates += 1;
            } else {
                map.insert(key, (name, category));
            }
        }
        Entries::Names(map)
    } else {
        let mut set = BTreeSet::new();
        for (_, line) in content_lines(text) {
            if !set.insert(line.trim().to_lowercase()) {
                duplicates += 1;
            }
        }
        Entries::Set(set)
    };
    let lex = Lexicon {
        kind,
        entries,
        source: source.to_string(),
        duplicates,
    };
    if lex.is_empty() {
        return Err(err(0, "lexicon has no entries"));
    }
    Ok(lex)
}

pub fn load_lexicon(path: impl AsRef<Path>, kind: LexiconKind) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text, &path.display().to_string(), kind)
}

/// All five name categories merged; a name listed in several categories
/// resolves to the first in [`NameCategory::ALL`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProperNameLexicon {
    names: BTreeMap<String, (String, NameCategory)>,
}

impl ProperNameLexicon {
    pub fn merge(lexicons: &[Lexicon]) -> Self {
        let mut sorted: Vec<&Lexicon> = lexicons.iter().collect();
        sorted.sort_by_key(|l| match l.kind {
            LexiconKind::ProperNames(c) => Some(c),
            _ => None,
        });
        let mut names = BTreeMap::new();
        for lex in sorted {
            if let Entries::Names(m) = &lex.entries {
                for (k, v) in m {
                    names.entry(k.clone()).or_insert_with(|| v.clone());
                }
            }
        }
        ProperNameLexicon { names }
    }

    pub fn category(&self, word: &str) -> Option<NameCategory> {
        self.names.get(&word.to_lowercase()).map(|(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Normalized words that occur more than `min_frequency` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentWordLexicon {
    pub words: BTreeSet<String>,
    pub min_frequency: u64,
}

impl FrequentWordLexicon {
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Keeps words with count strictly greater than `min_frequency`, strips
/// every non-alphanumeric character, case-folds, and drops empty results.
pub fn build_frequent_words(table: &FrequencyTable, min_frequency: u64) -> FrequentWordLexicon {
    let words = table
        .counts()
        .iter()
        .filter(|(_, &c)| c > min_frequency)
        .map(|(w, _)| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty() && w.chars().all(char::is_alphanumeric))
        .collect();
    FrequentWordLexicon {
        words,
        min_frequency: min_frequency.max(1),
    }
}

/// Maps each obfuscation character to the letters it can stand for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeetMap {
    map: BTreeMap<char, BTreeSet<char>>,
}

impl LeetMap {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in content_lines(text) {
            let err = |message: &str| Error::Lexicon {
                path: source.to_string(),
                line: n,
                message: message.to_string(),
            };
            let (key, subs) = line.split_once('\t').ok_or_else(|| err("expected char<TAB>substitutes"))?;
            let mut chars = key.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(err("key must be a single character")),
            };
            let subs: BTreeSet<char> = subs.trim().chars().flat_map(char::to_lowercase).collect();
            if subs.is_empty() {
                return Err(err("empty substitute set"));
            }
            map.entry(c.to_lowercase().next().unwrap_or(c))
                .or_insert_with(BTreeSet::new)
                .extend(subs);
        }
        Ok(LeetMap { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// True if `token_char` may stand for `letter`.
    pub fn substitutes(&self, token_char: char, letter: char) -> bool {
        self.map.get(&token_char).is_some_and(|s| s.contains(&letter))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

macro_rules! builtin {
    ($file:literal) => {
        ($file, include_str!(concat!("../data/lexicons/", $file)))
    };
}

const BLACKLIST: (&str, &str) = builtin!("blacklist.txt");
const ACRONYMS: (&str, &str) = builtin!("acronyms.tsv");
const CONTRACTIONS: (&str, &str) = builtin!("contractions.tsv");
const STOPWORDS: (&str, &str) = builtin!("stopwords.txt");
const LEMMAS: (&str, &str) = builtin!("lemmas.tsv");
const LEET: (&str, &str) = builtin!("leet.tsv");
const COMMON_WORDS: (&str, &str) = builtin!("common_words.txt");
const NAMES: [(NameCategory, (&str, &str)); 5] = [
    (NameCategory::Cities, builtin!("names/cities.txt")),
    (NameCategory::Countries, builtin!("names/countries.txt")),
    (NameCategory::Nationalities, builtin!("names/nationalities.txt")),
    (NameCategory::Ethnicities, builtin!("names/ethnicities.txt")),
    (NameCategory::PersonNames, builtin!("names/person_names.txt")),
];

/// Every lexicon the transforms need, loaded once and shared read-only.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    pub blacklist: Lexicon,
    pub acronyms: Lexicon,
    pub contractions: Lexicon,
    pub stopwords: Lexicon,
    pub lemmas: Lexicon,
    pub proper_names: ProperNameLexicon,
    pub leet: LeetMap,
    /// General-English word list used as the profanity false-positive guard
    /// alongside any corpus-derived frequent words.
    pub common_words: Lexicon,
}

impl LexiconSet {
    /// The lexicons shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_sources(|(name, text)| Ok((format!("builtin:{name}"), text.to_string())))
            .expect("builtin lexicons are valid")
    }

    /// Loads lexicons from `dir`, using the same relative file names as the
    /// shipped data (`blacklist.txt`, `names/cities.txt`, ...). Files missing
    /// from `dir` fall back to the shipped copy.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::from_sources(|(name, text)| {
            let path = dir.join(name);
            if path.exists() {
                let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok((path.display().to_string(), body))
            } else {
                log::debug!("{} not found, using builtin copy", path.display());
                Ok((format!("builtin:{name}"), text.to_string()))
            }
        })
    }

    fn from_sources<F>(mut fetch: F) -> Result<Self>
    where
        F: FnMut((&str, &str)) -> Result<(String, String)>,
    {
        let mut load = |src: (&str, &str), kind| -> Result<Lexicon> {
            let (source, text) = fetch(src)?;
            parse_lexicon(&text, &source, kind)
        };
        let blacklist = load(BLACKLIST, LexiconKind::Blacklist)?;
        let acronyms = load(ACRONYMS, LexiconKind::AcronymMap)?;
        let contractions = load(CONTRACTIONS, LexiconKind::ContractionMap)?;
        let stopwords = load(STOPWORDS, LexiconKind::Stopwords)?;
        let lemmas = load(LEMMAS, LexiconKind::LemmaMap)?;
        let common_words = load(COMMON_WORDS, LexiconKind::FrequentWords)?;
        let names = NAMES
            .iter()
            .map(|(c, src)| load(*src, LexiconKind::ProperNames(*c)))
            .collect::<Result<Vec<_>>>()?;
        let (leet_source, leet_text) = fetch(LEET)?;
        Ok(LexiconSet {
            blacklist,
            acronyms,
            contractions,
            stopwords,
            lemmas,
            proper_names: ProperNameLexicon::merge(&names),
            leet: LeetMap::parse(&leet_text, &leet_source)?,
            common_words,
        })
    }
}
