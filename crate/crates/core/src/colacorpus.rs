//! Acceptability corpora built from error-correction pairs.
//!
//! Every corrected pair contributes its erroneous source as an unacceptable
//! instance and its correction as an acceptable one. Parts are merged with
//! deduplication and split so that GEC-derived instances only ever land in
//! train or dev.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textcore::{AnnotatedPair, ColaInstance, Label, Origin};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub max_edits: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_len: 3,
            max_len: 80,
            max_edits: 10,
        }
    }
}

impl FilterConfig {
    /// Length bounds apply to both sides; the edit count is annotator 0's.
    pub fn accepts(&self, pair: &AnnotatedPair, target_len: usize) -> bool {
        let in_range = |n: usize| n >= self.min_len && n <= self.max_len;
        let edits = pair.canonical_edits().len();
        in_range(pair.source.len()) && in_range(target_len) && edits >= 1 && edits <= self.max_edits
    }
}

/// Converts corrected pairs into labelled instances, in input order. Pairs
/// without edits, failing the filter, or whose correction equals the source
/// are dropped.
pub fn build_cola_from_gec(pairs: &[AnnotatedPair], filter: &FilterConfig) -> Result<Vec<ColaInstance>> {
    let mut out = Vec::new();
    for pair in pairs {
        if pair.canonical_edits().is_empty() {
            continue;
        }
        let target = pair.resolved_target()?;
        if target == pair.source || !filter.accepts(pair, target.len()) {
            continue;
        }
        out.push(ColaInstance::new(
            pair.source.clone(),
            Label::Unacceptable,
            Origin::GecSource,
        ));
        out.push(ColaInstance::new(target, Label::Acceptable, Origin::GecTarget));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub train: Vec<ColaInstance>,
    pub dev: Vec<ColaInstance>,
    pub test: Vec<ColaInstance>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn splits(&self) -> [(&'static str, &[ColaInstance]); 3] {
        [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test", &self.test),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub dedupe: bool,
    /// Downsample the majority label of the train split.
    pub balance: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            dev_fraction: 0.1,
            test_fraction: 0.1,
            dedupe: true,
            balance: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MergeOutcome {
    pub corpus: Corpus,
    pub duplicates: usize,
    pub label_conflicts: usize,
}

/// Merges named parts into train/dev/test.
///
/// Non-GEC instances are split by `dev_fraction` / `test_fraction`; GEC
/// instances only by `dev_fraction`, the remainder going to train. Each
/// split keeps input order.
pub fn merge_corpora(
    parts: &[(String, Vec<ColaInstance>)],
    split: &SplitConfig,
    seed: u64,
) -> Result<MergeOutcome> {
    if parts.is_empty() {
        return Err(Error::config("merge_corpora needs at least one part"));
    }
    for f in [split.dev_fraction, split.test_fraction] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::config(format!("split fraction {f} outside [0, 1]")));
        }
    }
    if split.dev_fraction + split.test_fraction > 1.0 {
        return Err(Error::config("dev_fraction + test_fraction exceeds 1"));
    }

    let mut merged: Vec<ColaInstance> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut duplicates = 0;
    let mut label_conflicts = 0;
    for inst in parts.iter().flat_map(|(_, v)| v) {
        if !split.dedupe {
            merged.push(inst.clone());
            continue;
        }
        let key = inst.sentence.joined();
        match seen.get(&key) {
            None => {
                seen.insert(key, merged.len());
                merged.push(inst.clone());
            }
            Some(&i) => {
                duplicates += 1;
                let kept = &mut merged[i];
                if kept.label != inst.label {
                    label_conflicts += 1;
                    if inst.origin == Origin::Linguistics && kept.origin != Origin::Linguistics {
                        kept.label = inst.label;
                        kept.origin = inst.origin;
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0u8; merged.len()]; // 0 train, 1 dev, 2 test
    for gec in [false, true] {
        let mut idx: Vec<usize> = (0..merged.len())
            .filter(|&i| merged[i].origin.is_gec() == gec)
            .collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_test = if gec {
            0
        } else {
            (n as f64 * split.test_fraction).round() as usize
        };
        let n_dev = ((n as f64 * split.dev_fraction).round() as usize).min(n - n_test);
        for (rank, &i) in idx.iter().enumerate() {
            assignment[i] = if rank < n_test {
                2
            } else if rank < n_test + n_dev {
                1
            } else {
                0
            };
        }
    }

    let mut corpus = Corpus::default();
    for (inst, a) in merged.into_iter().zip(assignment) {
        match a {
            0 => corpus.train.push(inst),
            1 => corpus.dev.push(inst),
            _ => corpus.test.push(inst),
        }
    }
    if split.balance {
        balance_labels(&mut corpus.train, &mut rng);
    }
    Ok(MergeOutcome {
        corpus,
        duplicates,
        label_conflicts,
    })
}

fn balance_labels(train: &mut Vec<ColaInstance>, rng: &mut ChaCha8Rng) {
    let pos: Vec<usize> = (0..train.len())
        .filter(|&i| train[i].label == Label::Acceptable)
        .collect();
    let neg: Vec<usize> = (0..train.len())
        .filter(|&i| train[i].label == Label::Unacceptable)
        .collect();
    let (mut major, minor) = if pos.len() > neg.len() { (pos, neg) } else { (neg, pos) };
    major.shuffle(rng);
    let mut keep = vec![true; train.len()];
    for &i in &major[minor.len()..] {
        keep[i] = false;
    }
    let mut k = keep.into_iter();
    train.retain(|_| k.next().unwrap_or(true));
}

/// `{split: {label: {origin: count}}}` with every key present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatsReport(pub BTreeMap<String, BTreeMap<String, BTreeMap<String, usize>>>);

impl StatsReport {
    pub fn count(&self, split: &str, label: Label, origin: Origin) -> usize {
        self.0[split][&label.as_u8().to_string()][origin.as_str()]
    }

    pub fn total(&self) -> usize {
        self.0
            .values()
            .flat_map(|l| l.values())
            .flat_map(|o| o.values())
            .sum()
    }

    pub fn split_label_total(&self, split: &str, label: Label) -> usize {
        self.0[split][&label.as_u8().to_string()].values().sum()
    }
}

pub fn corpus_stats(c: &Corpus) -> StatsReport {
    let mut report = BTreeMap::new();
    for (name, instances) in c.splits() {
        let mut by_label = BTreeMap::new();
        for label in [Label::Unacceptable, Label::Acceptable] {
            let by_origin: BTreeMap<String, usize> = Origin::ALL
                .iter()
                .map(|o| (o.as_str().to_string(), 0))
                .collect();
            by_label.insert(label.as_u8().to_string(), by_origin);
        }
        for inst in instances {
            *by_label
                .get_mut(&inst.label.as_u8().to_string())
                .and_then(|m| m.get_mut(inst.origin.as_str()))
                .expect("all keys initialised") += 1;
        }
        report.insert(name.to_string(), by_label);
    }
    StatsReport(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::{Edit, ErrorType, Mode, Sentence};

    fn s(text: &str) -> Sentence {
        Sentence::parse_joined(text, Mode::Word).unwrap()
    }

    fn inst(text: &str, label: Label, origin: Origin) -> ColaInstance {
        ColaInstance::new(s(text), label, origin)
    }

    #[test]
    fn pair_yields_minimal_pair() {
        let pair = AnnotatedPair::single(
            s("She go home ."),
            vec![Edit::from_strs(1, 2, &["goes"], ErrorType::Sva)],
        )
        .unwrap();
        let out = build_cola_from_gec(&[pair], &FilterConfig::default()).unwrap();
        assert_eq!(
            out,
            vec![
                inst("She go home .", Label::Unacceptable, Origin::GecSource),
                inst("She goes home .", Label::Acceptable, Origin::GecTarget),
            ]
        );
    }

    #[test]
    fn unchanged_and_short_pairs_dropped() {
        let unchanged = AnnotatedPair::single(s("all is fine ."), vec![]).unwrap();
        let short = AnnotatedPair::single(
            s("go ."),
            vec![Edit::from_strs(0, 1, &["went"], ErrorType::Verb)],
        )
        .unwrap();
        let same_after_edit = AnnotatedPair::single(
            s("a b c"),
            vec![Edit::from_strs(0, 1, &["a"], ErrorType::Other)],
        )
        .unwrap();
        let out = build_cola_from_gec(&[unchanged, short, same_after_edit], &FilterConfig::default())
            .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn edit_count_filter() {
        let edits: Vec<Edit> = (0..3)
            .map(|i| Edit::from_strs(i, i + 1, &["x"], ErrorType::Other))
            .collect();
        let pair = AnnotatedPair::single(s("a b c d"), edits).unwrap();
        let strict = FilterConfig {
            max_edits: 2,
            ..Default::default()
        };
        assert!(build_cola_from_gec(&[pair.clone()], &strict).unwrap().is_empty());
        assert_eq!(build_cola_from_gec(&[pair], &FilterConfig::default()).unwrap().len(), 2);
    }

    #[test]
    fn dedupe_keeps_first_and_linguistics_label() {
        let parts = vec![
            (
                "gec".to_string(),
                vec![
                    inst("x y z", Label::Acceptable, Origin::GecTarget),
                    inst("p q r", Label::Unacceptable, Origin::GecSource),
                ],
            ),
            (
                "ling".to_string(),
                vec![
                    inst("x y z", Label::Acceptable, Origin::Linguistics),
                    inst("p q r", Label::Acceptable, Origin::Linguistics),
                ],
            ),
        ];
        let out = merge_corpora(&parts, &SplitConfig { dev_fraction: 0.0, test_fraction: 0.0, ..Default::default() }, 1).unwrap();
        assert_eq!(out.corpus.len(), 2);
        assert_eq!(out.duplicates, 2);
        assert_eq!(out.label_conflicts, 1);
        let pqr = out.corpus.train.iter().find(|i| i.sentence.joined() == "p q r").unwrap();
        assert_eq!(pqr.label, Label::Acceptable);
        assert_eq!(pqr.origin, Origin::Linguistics);
    }

    #[test]
    fn gec_instances_never_in_test() {
        let gec: Vec<ColaInstance> = (0..50)
            .map(|i| inst(&format!("g {i}"), Label::Acceptable, Origin::GecTarget))
            .collect();
        let all_test = SplitConfig {
            dev_fraction: 0.0,
            test_fraction: 1.0,
            ..Default::default()
        };
        let out = merge_corpora(&[("gec".into(), gec)], &all_test, 3).unwrap();
        assert!(out.corpus.test.is_empty());
        assert_eq!(out.corpus.train.len(), 50);
    }

    #[test]
    fn split_is_deterministic_and_ordered() {
        let ling: Vec<ColaInstance> = (0..100)
            .map(|i| inst(&format!("s {i}"), Label::from_u8((i % 2) as u8).unwrap(), Origin::Linguistics))
            .collect();
        let parts = vec![("ling".to_string(), ling)];
        let a = merge_corpora(&parts, &SplitConfig::default(), 42).unwrap();
        let b = merge_corpora(&parts, &SplitConfig::default(), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.corpus.test.len(), 10);
        assert_eq!(a.corpus.dev.len(), 10);
        let c = merge_corpora(&parts, &SplitConfig::default(), 43).unwrap();
        assert_ne!(a.corpus.test, c.corpus.test);
    }

    #[test]
    fn balancing_downsamples_majority() {
        let mut v: Vec<ColaInstance> = (0..30)
            .map(|i| inst(&format!("a {i}"), Label::Acceptable, Origin::Synthetic))
            .collect();
        v.extend((0..10).map(|i| inst(&format!("u {i}"), Label::Unacceptable, Origin::Synthetic)));
        let cfg = SplitConfig {
            dev_fraction: 0.0,
            test_fraction: 0.0,
            balance: true,
            ..Default::default()
        };
        let out = merge_corpora(&[("syn".into(), v)], &cfg, 5).unwrap();
        let stats = corpus_stats(&out.corpus);
        assert_eq!(stats.split_label_total("train", Label::Acceptable), 10);
        assert_eq!(stats.split_label_total("train", Label::Unacceptable), 10);
    }

    #[test]
    fn stats_shapes() {
        let empty = corpus_stats(&Corpus::default());
        assert_eq!(empty.total(), 0);
        assert_eq!(empty.0.len(), 3);
        let c = Corpus {
            train: vec![
                inst("a b c", Label::Unacceptable, Origin::GecSource),
                inst("a b d", Label::Acceptable, Origin::GecTarget),
            ],
            ..Default::default()
        };
        let st = corpus_stats(&c);
        assert_eq!(st.split_label_total("train", Label::Unacceptable), 1);
        assert_eq!(st.split_label_total("train", Label::Acceptable), 1);
        assert_eq!(st.count("train", Label::Acceptable, Origin::GecTarget), 1);
        assert_eq!(st.total(), c.len());
    }

    #[test]
    fn empty_parts_rejected() {
        assert!(matches!(
            merge_corpora(&[], &SplitConfig::default(), 0),
            Err(Error::Config(_))
        ));
    }
}
