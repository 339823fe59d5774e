//! Text transformations.
//!
//! Every transform is a pure `text -> text` function of its parameters and a
//! read-only [`TransformContext`]. Token-level transforms split on
//! whitespace and re-join with single spaces.

mod pipeline;
pub mod porter;
mod registry;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use pipeline::{parse_pipelines, serialize_pipelines, PipelineSpec};
pub use registry::{builtin_pipelines, Registry, RAW};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::fuzzy::{best_match, proper_name_check, strip_trailing_punct, FuzzyIndex, MatchPolicy, ObfuscationMatcher};
use crate::lexicons::{Lexicon, LexiconSet};

/// Placeholder written in place of a detected proper name.
pub const NAME_PLACEHOLDER: &str = "NAME";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum TokenizerMode {
    /// Maximal runs of non-whitespace characters, case preserved.
    #[default]
    Whitespace,
    /// As `Whitespace`, with every token lowercased.
    LowercaseWhitespace,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Tokenizer {
    pub mode: TokenizerMode,
}

impl Tokenizer {
    pub fn new(mode: TokenizerMode) -> Self {
        Tokenizer { mode }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        match self.mode {
            TokenizerMode::Whitespace => text.split_whitespace().map(str::to_string).collect(),
            TokenizerMode::LowercaseWhitespace => text.split_whitespace().map(str::to_lowercase).collect(),
        }
    }
}

/// The reference tokenizer: whitespace split, case preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

macro_rules! transform_names {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum TransformName {
            $($variant),*
        }

        impl TransformName {
            pub const ALL: &'static [TransformName] = &[$(TransformName::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(TransformName::$variant => $name),*
                }
            }
        }

        impl FromStr for TransformName {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(TransformName::$variant),)*
                    other => Err(Error::Pipeline(format!("unknown transform {other:?}"))),
                }
            }
        }
    };
}

transform_names! {
    ToLower => "to_lower",
    CollapseWhitespace => "collapse_whitespace",
    TrimWordLen => "trim_word_len",
    RemoveNonPrintable => "remove_non_printable",
    ReplaceContractions => "replace_contractions",
    ReplaceAcronyms => "replace_acronyms",
    RemoveStopwords => "remove_stopwords",
    RemoveRareWords => "remove_rare_words",
    RemoveWordsNonAlpha => "remove_words_non_alpha",
    StripNonAlphabetChars => "strip_non_alphabet_chars",
    Stem => "stem",
    Lemmatize => "lemmatize",
    BlacklistRegex => "blacklist_regex",
    ProfaneFuzzy => "profane_fuzzy",
    CommonFuzzy => "common_fuzzy",
    TagProperNames => "tag_proper_names",
}

impl fmt::Display for TransformName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TransformName {
    /// Parameter names accepted by this transform, with defaults.
    pub fn params(self) -> &'static [(&'static str, &'static str)] {
        match self {
            TransformName::TrimWordLen => &[("max_len", "30")],
            TransformName::RemoveRareWords => &[("min_count", "2")],
            TransformName::CommonFuzzy => &[("min_frequency", "100")],
            _ => &[],
        }
    }

    /// True if the transform reads corpus frequencies, which must then come
    /// from training data only.
    pub fn is_frequency_dependent(self) -> bool {
        matches!(self, TransformName::RemoveRareWords | TransformName::CommonFuzzy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransformSpec {
    pub name: TransformName,
    pub params: BTreeMap<String, String>,
}

impl TransformSpec {
    pub fn new(name: TransformName) -> Self {
        TransformSpec {
            name,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let known = self.name.params();
        for (k, v) in &self.params {
            if !known.iter().any(|(name, _)| name == k) {
                return Err(Error::Pipeline(format!("{} does not take parameter {k:?}", self.name)));
            }
            if v.parse::<u64>().map_or(true, |n| n == 0) {
                return Err(Error::Pipeline(format!(
                    "{}: parameter {k} must be a positive integer, got {v:?}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Integer parameter, or its default.
    pub fn param_u64(&self, key: &str) -> u64 {
        let default = self
            .name
            .params()
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, d)| *d)
            .unwrap_or("0");
        self.params
            .get(key)
            .map(String::as_str)
            .unwrap_or(default)
            .parse()
            .unwrap_or(0)
    }
}

impl From<TransformName> for TransformSpec {
    fn from(name: TransformName) -> Self {
        TransformSpec::new(name)
    }
}

/// Shared read-only resources the transforms draw on.
#[derive(Debug, Clone, Default)]
pub struct TransformContext {
    pub lexicons: Option<Arc<LexiconSet>>,
    pub matcher: Option<Arc<ObfuscationMatcher>>,
    pub frequencies: Option<Arc<FrequencyTable>>,
    pub frequent_words: Option<Arc<FuzzyIndex>>,
    pub policy: MatchPolicy,
}

impl TransformContext {
    /// Context with lexicons and a blacklist matcher guarded by the
    /// lexicons' common-word list; no corpus-derived resources.
    pub fn with_lexicons(lexicons: Arc<LexiconSet>) -> Self {
        let matcher = ObfuscationMatcher::from_lexicons(&lexicons, []);
        TransformContext {
            matcher: Some(Arc::new(matcher)),
            lexicons: Some(lexicons),
            ..Default::default()
        }
    }

    pub fn set_frequencies(&mut self, table: Arc<FrequencyTable>) {
        self.frequencies = Some(table);
    }

    pub fn set_frequent_words(&mut self, index: Arc<FuzzyIndex>) {
        self.frequent_words = Some(index);
    }

    fn lexicons(&self, name: TransformName) -> Result<&LexiconSet> {
        self.lexicons.as_deref().ok_or(Error::MissingResource {
            transform: name.to_string(),
            resource: "lexicons",
        })
    }

    fn matcher(&self, name: TransformName) -> Result<&ObfuscationMatcher> {
        self.matcher.as_deref().ok_or(Error::MissingResource {
            transform: name.to_string(),
            resource: "blacklist matcher",
        })
    }
}

fn map_tokens<F>(text: &str, mut f: F) -> String
where
    F: FnMut(&str) -> Option<String>,
{
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if let Some(t) = f(token) {
            if t.is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&t);
        }
    }
    out
}

fn keep_if(text: &str, mut keep: impl FnMut(&str) -> bool) -> String {
    map_tokens(text, |t| keep(t).then(|| t.to_string()))
}

/// Map lookup on the whole token, then on the token without trailing
/// punctuation (which is re-appended).
fn replace_from_map(text: &str, map: &Lexicon) -> String {
    map_tokens(text, |t| {
        if let Some(r) = map.lookup(t) {
            return Some(r.to_string());
        }
        let base = strip_trailing_punct(t);
        if !base.is_empty() && base.len() < t.len() {
            if let Some(r) = map.lookup(base) {
                return Some(format!("{r}{}", &t[base.len()..]));
            }
        }
        Some(t.to_string())
    })
}

/// Unicode format characters (general category Cf).
fn is_format_char(c: char) -> bool {
    matches!(c as u32,
        0x00AD | 0x0600..=0x0605 | 0x061C | 0x06DD | 0x070F | 0x0890..=0x0891 | 0x08E2
        | 0x180E | 0x200B..=0x200F | 0x202A..=0x202E | 0x2060..=0x2064 | 0x2066..=0x206F
        | 0xFEFF | 0xFFF9..=0xFFFB | 0x110BD | 0x110CD | 0x13430..=0x1343F
        | 0x1BCA0..=0x1BCA3 | 0x1D173..=0x1D17A | 0xE0001 | 0xE0020..=0xE007F)
}

fn is_non_printable(c: char) -> bool {
    !matches!(c, '\n' | '\t' | '\r') && (c.is_control() || is_format_char(c))
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Applies one transform to `text`.
pub fn apply_transform(text: &str, spec: &TransformSpec, ctx: &TransformContext) -> Result<String> {
    use TransformName::*;
    let name = spec.name;
    Ok(match name {
        ToLower => text.to_lowercase(),
        CollapseWhitespace => collapse_whitespace(text),
        TrimWordLen => {
            let max = spec.param_u64("max_len") as usize;
            map_tokens(text, |t| Some(t.chars().take(max).collect()))
        }
        RemoveNonPrintable => text.chars().filter(|&c| !is_non_printable(c)).collect(),
        ReplaceContractions => replace_from_map(text, &ctx.lexicons(name)?.contractions),
        ReplaceAcronyms => replace_from_map(text, &ctx.lexicons(name)?.acronyms),
        RemoveStopwords => {
            let stop = &ctx.lexicons(name)?.stopwords;
            keep_if(text, |t| !stop.contains(t))
        }
        RemoveRareWords => {
            let table = ctx.frequencies.as_deref().ok_or(Error::MissingResource {
                transform: name.to_string(),
                resource: "frequency table",
            })?;
            let min = spec.param_u64("min_count");
            keep_if(text, |t| table.count(t) >= min)
        }
        RemoveWordsNonAlpha => keep_if(text, |t| t.chars().all(char::is_alphabetic)),
        StripNonAlphabetChars => {
            let kept: String = text.chars().filter(|c| c.is_alphabetic() || c.is_whitespace()).collect();
            collapse_whitespace(&kept)
        }
        Stem => map_tokens(text, |t| {
            if t.bytes().all(|b| b.is_ascii_alphabetic()) {
                Some(porter::stem(&t.to_ascii_lowercase()))
            } else {
                Some(t.to_string())
            }
        }),
        Lemmatize => {
            let lemmas = &ctx.lexicons(name)?.lemmas;
            map_tokens(text, |t| Some(lemmas.lookup(t).unwrap_or(t).to_string()))
        }
        BlacklistRegex => {
            let m = ctx.matcher(name)?;
            map_tokens(text, |t| Some(m.pattern_match(t).unwrap_or(t).to_string()))
        }
        ProfaneFuzzy => {
            let m = ctx.matcher(name)?;
            map_tokens(text, |t| Some(m.profane_match(t).unwrap_or(t).to_string()))
        }
        CommonFuzzy => {
            let index = ctx.frequent_words.as_deref().ok_or(Error::MissingResource {
                transform: name.to_string(),
                resource: "frequent-word index",
            })?;
            map_tokens(text, |t| match best_match(index, t, &ctx.policy) {
                Some(m) if m.distance > 0 => Some(m.candidate),
                _ => Some(t.to_string()),
            })
        }
        TagProperNames => {
            let names = &ctx.lexicons(name)?.proper_names;
            map_tokens(text, |t| {
                let base = strip_trailing_punct(t);
                if proper_name_check(base, names).is_some() {
                    Some(NAME_PLACEHOLDER.to_string())
                } else {
                    Some(t.to_string())
                }
            })
        }
    })
}

/// Left-to-right fold of [`apply_transform`] over the pipeline's stages.
pub fn apply_pipeline(text: &str, pipeline: &PipelineSpec, ctx: &TransformContext) -> Result<String> {
    apply_stages(text, &pipeline.stages, ctx)
}

pub fn apply_stages(text: &str, stages: &[TransformSpec], ctx: &TransformContext) -> Result<String> {
    let mut cur = text.to_string();
    for (index, stage) in stages.iter().enumerate() {
        cur = apply_transform(&cur, stage, ctx).map_err(|e| Error::Stage {
            index,
            name: stage.name.to_string(),
            source: Box::new(e),
        })?;
    }
    Ok(cur)
}
