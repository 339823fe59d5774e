//! Registered transforms and the built-in composite pipelines.

use super::{parse_pipelines, PipelineSpec, TransformName};
use crate::error::{Error, Result};

const BUILTIN_PIPELINES: &str = include_str!("../../data/pipelines.txt");

/// Id of the untransformed baseline.
pub const RAW: &str = "Raw";

pub fn builtin_pipelines() -> Vec<PipelineSpec> {
    parse_pipelines(BUILTIN_PIPELINES).expect("builtin pipeline file is valid")
}

/// Every atomic transform (as a one-stage pipeline named after it) plus the
/// composite pipelines.
#[derive(Debug, Clone)]
pub struct Registry {
    pipelines: Vec<PipelineSpec>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_composites(builtin_pipelines()).expect("builtin ids are unique")
    }
}

impl Registry {
    pub fn with_composites(composites: Vec<PipelineSpec>) -> Result<Self> {
        let mut pipelines: Vec<PipelineSpec> =
            TransformName::ALL.iter().map(|&n| PipelineSpec::single(n)).collect();
        for p in composites {
            p.validate()?;
            if p.id == RAW || pipelines.iter().any(|q| q.id == p.id) {
                return Err(Error::Pipeline(format!("pipeline id {} is already registered", p.id)));
            }
            pipelines.push(p);
        }
        Ok(Registry { pipelines })
    }

    pub fn transform_names(&self) -> &'static [TransformName] {
        TransformName::ALL
    }

    pub fn pipelines(&self) -> &[PipelineSpec] {
        &self.pipelines
    }

    pub fn composites(&self) -> impl Iterator<Item = &PipelineSpec> {
        self.pipelines.iter().skip(TransformName::ALL.len())
    }

    pub fn ids(&self) -> Vec<String> {
        std::iter::once(RAW.to_string())
            .chain(self.pipelines.iter().map(|p| p.id.clone()))
            .collect()
    }

    /// Looks up `id`. `Raw` resolves to `None` (no transformation).
    pub fn resolve(&self, id: &str) -> Result<Option<&PipelineSpec>> {
        if id == RAW {
            return Ok(None);
        }
        self.pipelines
            .iter()
            .find(|p| p.id == id)
            .map(Some)
            .ok_or_else(|| Error::UnknownPipeline {
                id: id.to_string(),
                known: self.ids(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TransformName::*;

    #[test]
    fn ppo11_has_the_nine_stages() {
        let reg = Registry::default();
        let p = reg.resolve("PPO-11-LWTN-CoAcBkPrCm").unwrap().unwrap();
        let names: Vec<TransformName> = p.stages.iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            [
                ToLower,
                CollapseWhitespace,
                TrimWordLen,
                RemoveNonPrintable,
                ReplaceContractions,
                ReplaceAcronyms,
                BlacklistRegex,
                ProfaneFuzzy,
                CommonFuzzy
            ]
        );
    }

    #[test]
    fn counts() {
        let reg = Registry::default();
        assert!(reg.transform_names().len() >= 16);
        assert_eq!(reg.composites().count(), 15);
        assert_eq!(reg.ids().len(), 32);
        for p in reg.pipelines() {
            p.validate().unwrap();
        }
    }

    #[test]
    fn raw_and_unknown() {
        let reg = Registry::default();
        assert!(reg.resolve(RAW).unwrap().is_none());
        let err = reg.resolve("PPO-99").unwrap_err().to_string();
        assert!(err.contains("PPO-11-LWTN-CoAcBkPrCm"), "{err}");
        assert!(reg.resolve("stem").unwrap().is_some());
    }
}
