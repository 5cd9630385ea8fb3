use std::collections::{BTreeMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grammar::SynthGrammar;
use super::inject::{inject, ErrorInjectionSpec, ErrorKind};
use crate::colacorpus::{build_cola_from_gec, corpus_stats, merge_corpora, Corpus, FilterConfig, SplitConfig, StatsReport};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::textcore::{AnnotatedPair, ColaInstance, Label, Origin, Sentence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    /// Extra corrupted/clean pairs that enter the acceptability corpus as
    /// synthetic instances and give it a test split.
    pub cola_synthetic: usize,
}

impl Default for BenchmarkSizes {
    fn default() -> Self {
        BenchmarkSizes {
            train: 2000,
            dev: 200,
            test: 200,
            cola_synthetic: 400,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub pairs: usize,
    pub edits: usize,
    pub skipped: usize,
    pub tokens: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub generation_seed: u64,
    pub injection_seed: u64,
    pub split_seed: u64,
    pub sizes: BenchmarkSizes,
    pub spec: ErrorInjectionSpec,
    pub splits: BTreeMap<String, SplitSummary>,
    /// Injected-kind counts over the three GEC splits.
    pub kind_counts: BTreeMap<ErrorKind, usize>,
    pub kind_fractions: BTreeMap<ErrorKind, f64>,
    pub cola: StatsReport,
    pub cola_duplicates: usize,
    pub cola_label_conflicts: usize,
}

impl Manifest {
    pub fn kind_fraction(&self, kind: ErrorKind) -> f64 {
        self.kind_fractions.get(&kind).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub train: Vec<AnnotatedPair>,
    pub dev: Vec<AnnotatedPair>,
    pub test: Vec<AnnotatedPair>,
    pub cola: Corpus,
    pub manifest: Manifest,
}

const UNIQUE_ATTEMPTS_PER_SENTENCE: usize = 50;

/// Builds GEC splits over distinct clean sentences plus an acceptability
/// corpus. GEC-derived instances come from train and dev only.
pub fn make_benchmark(
    g: &SynthGrammar,
    spec: &ErrorInjectionSpec,
    sizes: &BenchmarkSizes,
    seed: u64,
) -> Result<Benchmark> {
    g.validate()?;
    spec.validate()?;
    for (name, n) in [("train", sizes.train), ("dev", sizes.dev), ("test", sizes.test)] {
        if n == 0 {
            return Err(Error::config(format!("benchmark split {name} has size 0")));
        }
    }
    let generation_seed = derive_seed(seed, 1);
    let injection_seed = derive_seed(seed, 2);
    let split_seed = derive_seed(seed, 3);

    let need = sizes.train + sizes.dev + sizes.test + sizes.cola_synthetic;
    let mut seen = HashSet::new();
    let mut clean: Vec<Sentence> = Vec::with_capacity(need);
    let mut i = 0u64;
    while clean.len() < need {
        if i as usize >= need * UNIQUE_ATTEMPTS_PER_SENTENCE {
            return Err(Error::config(format!(
                "grammar produced only {} distinct sentences of {need} requested",
                clean.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(generation_seed, i));
        let s = g.generate_sentence(&mut rng);
        if seen.insert(s.joined()) {
            clean.push(s);
        }
        i += 1;
    }

    let mut kind_counts: BTreeMap<ErrorKind, usize> = ErrorKind::ALL.iter().map(|k| (*k, 0)).collect();
    let mut splits = BTreeMap::new();
    let mut pairs_by_split: Vec<Vec<AnnotatedPair>> = Vec::new();
    let mut offset = 0;
    let mut synthetic: Vec<ColaInstance> = Vec::new();
    for (name, n) in [
        ("train", sizes.train),
        ("dev", sizes.dev),
        ("test", sizes.test),
        ("cola_synthetic", sizes.cola_synthetic),
    ] {
        let mut summary = SplitSummary::default();
        let mut pairs = Vec::with_capacity(n);
        for (j, s) in clean[offset..offset + n].iter().enumerate() {
            let inj = inject(g, s, spec, derive_seed(injection_seed, (offset + j) as u64))?;
            summary.pairs += 1;
            summary.edits += inj.gold.len();
            summary.skipped += inj.skipped as usize;
            summary.tokens += inj.corrupted.len();
            if name == "cola_synthetic" {
                if !inj.gold.is_empty() {
                    synthetic.push(ColaInstance::new(inj.corrupted, Label::Unacceptable, Origin::Synthetic));
                    synthetic.push(ColaInstance::new(s.clone(), Label::Acceptable, Origin::Synthetic));
                }
                continue;
            }
            for k in &inj.kinds {
                *kind_counts.get_mut(k).unwrap() += 1;
            }
            let mut pair = AnnotatedPair::single(inj.corrupted, inj.gold)?;
            debug_assert_eq!(pair.target.as_ref(), Some(s));
            pair.target = Some(s.clone());
            pairs.push(pair);
        }
        offset += n;
        splits.insert(name.to_string(), summary);
        if name != "cola_synthetic" {
            pairs_by_split.push(pairs);
        }
    }
    let test = pairs_by_split.pop().unwrap();
    let dev = pairs_by_split.pop().unwrap();
    let train = pairs_by_split.pop().unwrap();

    let gec_part: Vec<ColaInstance> = build_cola_from_gec(&train, &FilterConfig::default())?
        .into_iter()
        .chain(build_cola_from_gec(&dev, &FilterConfig::default())?)
        .collect();
    let merged = merge_corpora(
        &[("gec".to_string(), gec_part), ("synthetic".to_string(), synthetic)],
        &SplitConfig::default(),
        split_seed,
    )?;

    let total: usize = kind_counts.values().sum();
    let kind_fractions = kind_counts
        .iter()
        .map(|(k, c)| (*k, if total == 0 { 0.0 } else { *c as f64 / total as f64 }))
        .collect();
    let manifest = Manifest {
        seed,
        generation_seed,
        injection_seed,
        split_seed,
        sizes: sizes.clone(),
        spec: spec.clone(),
        splits,
        kind_counts,
        kind_fractions,
        cola: corpus_stats(&merged.corpus),
        cola_duplicates: merged.duplicates,
        cola_label_conflicts: merged.label_conflicts,
    };
    Ok(Benchmark {
        train,
        dev,
        test,
        cola: merged.corpus,
        manifest,
    })
}
