use std::path::{Path, PathBuf};

use colagec::align::ExtractConfig;
use colagec::colacorpus::{FilterConfig, SplitConfig};
use colagec::evalmetrics::{EditMatchConfig, FilterMode};
use colagec::judge::JudgeHyper;
use colagec::synth::{BenchmarkSizes, ErrorInjectionSpec, SynthGrammar};
use colagec::textcore::Mode;
use colagec::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::experiment::GecRecipe;

/// Prefix of the environment variables that override config values.
pub const ENV_PREFIX: &str = "COLAGEC_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    /// `english`, `character`, or a path to a grammar JSON file.
    pub grammar: String,
    pub synth: SynthSection,
    pub cola: ColaSection,
    pub judge: JudgeHyper,
    pub gec: GecRecipe,
    pub decode: DecodeSection,
    pub eval: EvalSection,
    pub error_analysis: ErrorAnalysisSection,
    pub ablate: AblateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            threads: 1,
            grammar: "english".into(),
            synth: SynthSection::default(),
            cola: ColaSection::default(),
            judge: JudgeHyper::default(),
            gec: GecRecipe::default(),
            decode: DecodeSection::default(),
            eval: EvalSection::default(),
            error_analysis: ErrorAnalysisSection::default(),
            ablate: AblateSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// `mix-a`, `mix-b`, or a path to an injection spec JSON file.
    pub mix: String,
    pub sizes: BenchmarkSizes,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            mix: "mix-a".into(),
            sizes: BenchmarkSizes::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColaSection {
    pub filter: FilterConfig,
    pub split: SplitConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub beam: usize,
    /// Reranker weight applied when `decode` is given a judge.
    pub lambda: f64,
}

impl Default for DecodeSection {
    fn default() -> Self {
        DecodeSection { beam: 4, lambda: 0.5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub type_sensitive: bool,
}

impl EvalSection {
    pub fn match_config(&self) -> EditMatchConfig {
        EditMatchConfig {
            type_sensitive: self.type_sensitive,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorAnalysisSection {
    pub mode: FilterMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSection {
    pub num_seeds: usize,
}

impl Default for AblateSection {
    fn default() -> Self {
        AblateSection { num_seeds: 5 }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::File {
        path: path.into(),
        message: e.to_string(),
    })
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: RunConfig = match path {
            Some(p) => parse_json(p)?,
            None => RunConfig::default(),
        };
        Ok(cfg)
    }

    /// Applies `COLAGEC_<KEY>` overrides for the scalar top-level keys.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        let var = |k: &str| get(&format!("{ENV_PREFIX}{k}"));
        if let Some(v) = var("SEED") {
            self.seed = v
                .parse()
                .map_err(|_| Error::config(format!("{ENV_PREFIX}SEED: not an unsigned integer: {v:?}")))?;
        }
        if let Some(v) = var("THREADS") {
            self.threads = v
                .parse()
                .map_err(|_| Error::config(format!("{ENV_PREFIX}THREADS: not an unsigned integer: {v:?}")))?;
        }
        if let Some(v) = var("GRAMMAR") {
            self.grammar = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::config("threads: must be at least 1"));
        }
        if self.decode.beam == 0 {
            return Err(Error::config("decode.beam: must be at least 1"));
        }
        if self.ablate.num_seeds == 0 {
            return Err(Error::config("ablate.num_seeds: must be at least 1"));
        }
        if !(self.decode.lambda.is_finite() && self.decode.lambda >= 0.0) {
            return Err(Error::config("decode.lambda: must be finite and >= 0"));
        }
        self.gec.validate().map_err(|e| Error::config(format!("gec: {e}")))?;
        Ok(())
    }

    pub fn grammar(&self) -> Result<SynthGrammar> {
        match self.grammar.as_str() {
            "english" => Ok(SynthGrammar::english()),
            "character" => Ok(SynthGrammar::character()),
            path => {
                let g: SynthGrammar = parse_json(&PathBuf::from(path))?;
                g.validate().map_err(|e| e.in_file(path))?;
                Ok(g)
            }
        }
    }

    pub fn mode(&self) -> Result<Mode> {
        Ok(self.grammar()?.mode)
    }

    pub fn extract(&self) -> Result<ExtractConfig> {
        Ok(ExtractConfig::with_lexicon(self.grammar()?.lexicon()))
    }

    pub fn injection(&self) -> Result<ErrorInjectionSpec> {
        if !self.synth.mix.ends_with(".json") {
            return ErrorInjectionSpec::preset_named(&self.synth.mix)
                .map_err(|e| Error::config(format!("synth.mix: {e}")));
        }
        let spec: ErrorInjectionSpec = parse_json(Path::new(&self.synth.mix))?;
        spec.validate().map_err(|e| e.in_file(&self.synth.mix))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seed": 1, "bogus": 2}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = serde_json::from_str::<RunConfig>(r#"{"judge": {"lr": 1, "epochz": 2}}"#).unwrap_err();
        assert!(err.to_string().contains("epochz"));
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
    }

    #[test]
    fn env_overrides() {
        let mut c = RunConfig::default();
        c.apply_env(|k| match k {
            "COLAGEC_SEED" => Some("42".into()),
            "COLAGEC_GRAMMAR" => Some("character".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.mode().unwrap(), Mode::Character);
        assert!(c.apply_env(|_| Some("x".into())).is_err());
    }

    #[test]
    fn bad_values_fail_validation() {
        let c = RunConfig {
            threads: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.decode.lambda = -1.0;
        assert!(c.validate().is_err());
    }
}
