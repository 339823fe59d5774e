//! Pipeline definitions and their text format.
//!
//! ```text
//! # comment
//! id PPO-2-LWT
//! stage to_lower
//! stage collapse_whitespace
//! stage trim_word_len max_len=30
//! ```
//!
//! Blocks are separated by blank lines. Serialization is canonical: one
//! blank line between blocks, parameters in key order.

use std::collections::BTreeMap;

use super::{TransformName, TransformSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PipelineSpec {
    pub id: String,
    pub stages: Vec<TransformSpec>,
}

impl PipelineSpec {
    /// Validated pipeline: non-empty id without whitespace, at least one
    /// stage, every stage's parameters valid.
    pub fn new(id: impl Into<String>, stages: Vec<TransformSpec>) -> Result<Self> {
        let p = PipelineSpec { id: id.into(), stages };
        p.validate()?;
        Ok(p)
    }

    pub fn single(name: TransformName) -> Self {
        PipelineSpec {
            id: name.as_str().to_string(),
            stages: vec![name.into()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(char::is_whitespace) {
            return Err(Error::Pipeline(format!("invalid pipeline id {:?}", self.id)));
        }
        if self.stages.is_empty() {
            return Err(Error::Pipeline(format!("pipeline {} has no stages", self.id)));
        }
        for s in &self.stages {
            s.validate()?;
        }
        Ok(())
    }

    pub fn is_frequency_dependent(&self) -> bool {
        self.stages.iter().any(|s| s.name.is_frequency_dependent())
    }
}

/// Parses every pipeline block in `text`.
pub fn parse_pipelines(text: &str) -> Result<Vec<PipelineSpec>> {
    let mut out = Vec::new();
    let mut current: Option<PipelineSpec> = None;
    let err = |n: usize, msg: String| Error::Pipeline(format!("line {n}: {msg}"));

    let finish = |cur: &mut Option<PipelineSpec>, out: &mut Vec<PipelineSpec>| -> Result<()> {
        if let Some(p) = cur.take() {
            p.validate()?;
            out.push(p);
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            finish(&mut current, &mut out)?;
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("id") => {
                finish(&mut current, &mut out)?;
                let id = words.next().ok_or_else(|| err(n, "missing pipeline id".into()))?;
                if words.next().is_some() {
                    return Err(err(n, "pipeline id must be a single word".into()));
                }
                current = Some(PipelineSpec {
                    id: id.to_string(),
                    stages: Vec::new(),
                });
            }
            Some("stage") => {
                let p = current
                    .as_mut()
                    .ok_or_else(|| err(n, "stage before any id line".into()))?;
                let name: TransformName = words
                    .next()
                    .ok_or_else(|| err(n, "missing transform name".into()))?
                    .parse()
                    .map_err(|e: Error| err(n, e.to_string()))?;
                let mut params = BTreeMap::new();
                for kv in words {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| err(n, format!("expected key=value, got {kv:?}")))?;
                    if params.insert(k.to_string(), v.to_string()).is_some() {
                        return Err(err(n, format!("duplicate parameter {k}")));
                    }
                }
                p.stages.push(TransformSpec { name, params });
            }
            Some(other) => return Err(err(n, format!("expected `id` or `stage`, got {other:?}"))),
            None => unreachable!("blank lines handled above"),
        }
    }
    finish(&mut current, &mut out)?;

    let mut seen = std::collections::HashSet::new();
    for p in &out {
        if !seen.insert(p.id.as_str()) {
            return Err(Error::Pipeline(format!("duplicate pipeline id {}", p.id)));
        }
    }
    Ok(out)
}

pub fn serialize_pipelines(pipelines: &[PipelineSpec]) -> String {
    let mut out = String::new();
    for (i, p) in pipelines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("id ");
        out.push_str(&p.id);
        out.push('\n');
        for s in &p.stages {
            out.push_str("stage ");
            out.push_str(s.name.as_str());
            for (k, v) in &s.params {
                out.push(' ');
                out.push_str(k);
                out.push('=');
                out.push_str(v);
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_blocks() {
        let text = "# two pipelines\nid a\nstage to_lower\nstage trim_word_len max_len=12\n\n\nid b\nstage stem\n";
        let ps = parse_pipelines(text).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].stages[1].param_u64("max_len"), 12);
        assert_eq!(ps[1].id, "b");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pipelines("id a\n").is_err());
        assert!(parse_pipelines("stage to_lower\n").is_err());
        assert!(parse_pipelines("id a\nstage nope\n").is_err());
        assert!(parse_pipelines("id a\nstage trim_word_len 30\n").is_err());
        assert!(parse_pipelines("id a\nstage to_lower\n\nid a\nstage stem\n").is_err());
        assert!(PipelineSpec::new("x", vec![]).is_err());
    }

    #[test]
    fn canonical_text_round_trips_exactly() {
        let text = "id a\nstage to_lower\nstage trim_word_len max_len=12\n\nid b\nstage stem\n";
        assert_eq!(serialize_pipelines(&parse_pipelines(text).unwrap()), text);
    }

    fn arb_stage() -> impl Strategy<Value = TransformSpec> {
        (0..TransformName::ALL.len(), 1u64..100).prop_map(|(i, v)| {
            let name = TransformName::ALL[i];
            let mut s = TransformSpec::new(name);
            if let Some((k, _)) = name.params().first() {
                s = s.with_param(k, v);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn parse_serialize_parse(
            stages in proptest::collection::vec(proptest::collection::vec(arb_stage(), 1..6), 1..4)
        ) {
            let ps: Vec<PipelineSpec> = stages
                .into_iter()
                .enumerate()
                .map(|(i, s)| PipelineSpec::new(format!("P-{i}"), s).unwrap())
                .collect();
            let text = serialize_pipelines(&ps);
            let back = parse_pipelines(&text).unwrap();
            prop_assert_eq!(&back, &ps);
            prop_assert_eq!(serialize_pipelines(&back), text);
        }
    }
}
