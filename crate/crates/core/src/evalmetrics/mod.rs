//! Edit-level scoring: best-annotator matching, P/R/F-beta, per-type
//! breakdowns, filtered evaluation and the ablation harness.

mod ablation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::align::{extract_edits, ExtractConfig};
use crate::error::{Error, Result};
use crate::judge::ConfusionCounts;
use crate::textcore::{apply_edits, AnnotatedPair, Edit, ErrorType, Sentence};

pub use ablation::{ablation_run, AblationReport, AblationRow, SeedResult};

/// Span and correction must always agree; the type only when `type_sensitive`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EditMatchConfig {
    pub type_sensitive: bool,
}

impl EditMatchConfig {
    fn same(&self, a: &Edit, b: &Edit) -> bool {
        a.same_correction(b) && (!self.type_sensitive || a.etype == b.etype)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Precision, recall and F-beta, each 0 when its denominator is 0.
pub fn prf(c: &ConfusionCounts, beta: f64) -> Prf {
    assert!(beta > 0.0, "beta must be positive");
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Prf {
        precision,
        recall,
        f: f_beta(precision, recall, beta),
    }
}

pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    if p + r == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / (b2 * p + r)
    }
}

/// Result of scoring one sentence against its chosen annotator.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceMatch {
    pub counts: ConfusionCounts,
    pub annotator: usize,
    pub hyp_matched: Vec<bool>,
    pub gold_matched: Vec<bool>,
}

fn match_one(hyp: &[Edit], gold: &[Edit], cfg: &EditMatchConfig) -> (Vec<bool>, Vec<bool>) {
    let mut gold_matched = vec![false; gold.len()];
    let mut hyp_matched = vec![false; hyp.len()];
    for (h, hm) in hyp.iter().zip(hyp_matched.iter_mut()) {
        if let Some(j) = (0..gold.len()).find(|&j| !gold_matched[j] && cfg.same(h, &gold[j])) {
            gold_matched[j] = true;
            *hm = true;
        }
    }
    (hyp_matched, gold_matched)
}

/// Scores against each annotator and keeps the one with the best sentence
/// F0.5, ties going to the lower annotator index.
pub fn match_edits_detailed(hyp: &[Edit], gold: &[Vec<Edit>], cfg: &EditMatchConfig) -> SentenceMatch {
    let empty = [Vec::new()];
    let gold = if gold.is_empty() { &empty[..] } else { gold };
    let mut best: Option<(f64, SentenceMatch)> = None;
    for (a, edits) in gold.iter().enumerate() {
        let (hyp_matched, gold_matched) = match_one(hyp, edits, cfg);
        let tp = hyp_matched.iter().filter(|m| **m).count() as u64;
        let counts = ConfusionCounts::new(tp, hyp.len() as u64 - tp, edits.len() as u64 - tp, 0);
        let f = prf(&counts, 0.5).f;
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((
                f,
                SentenceMatch {
                    counts,
                    annotator: a,
                    hyp_matched,
                    gold_matched,
                },
            ));
        }
    }
    best.unwrap().1
}

pub fn match_edits(hyp: &[Edit], gold: &[Vec<Edit>], cfg: &EditMatchConfig) -> ConfusionCounts {
    match_edits_detailed(hyp, gold, cfg).counts
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    /// Share of all gold edits on the chosen annotators, in percent.
    pub gold_pct: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub counts: ConfusionCounts,
    pub sentences: usize,
    pub per_type: BTreeMap<String, TypeStats>,
}

/// One sentence to score: classified hypothesis edits and the gold edits of
/// every annotator.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredItem {
    pub hyp: Vec<Edit>,
    pub gold: Vec<Vec<Edit>>,
}

/// Corpus-level report. True positives and misses are attributed to the
/// gold edit's type, false positives to the hypothesis edit's type.
pub fn score(items: &[ScoredItem], cfg: &EditMatchConfig) -> MetricsReport {
    let mut counts = ConfusionCounts::default();
    let mut per_type: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for item in items {
        let m = match_edits_detailed(&item.hyp, &item.gold, cfg);
        counts += m.counts;
        let gold = item.gold.get(m.annotator).map(Vec::as_slice).unwrap_or(&[]);
        for (g, matched) in gold.iter().zip(&m.gold_matched) {
            let c = per_type.entry(g.etype.to_string()).or_default();
            if *matched {
                c.tp += 1;
            } else {
                c.fn_ += 1;
            }
        }
        for (h, matched) in item.hyp.iter().zip(&m.hyp_matched) {
            if !matched {
                per_type.entry(h.etype.to_string()).or_default().fp += 1;
            }
        }
    }
    let gold_total = counts.tp + counts.fn_;
    let overall = prf(&counts, 0.5);
    MetricsReport {
        precision: overall.precision,
        recall: overall.recall,
        f05: overall.f,
        counts,
        sentences: items.len(),
        per_type: per_type
            .into_iter()
            .map(|(t, c)| {
                let p = prf(&c, 0.5);
                let share = if gold_total == 0 {
                    0.0
                } else {
                    100.0 * (c.tp + c.fn_) as f64 / gold_total as f64
                };
                (
                    t,
                    TypeStats {
                        counts: c,
                        precision: p.precision,
                        recall: p.recall,
                        f05: p.f,
                        gold_pct: share,
                    },
                )
            })
            .collect(),
    }
}

/// Extracts and classifies the edits turning each source into its
/// hypothesis, pairing them with the gold annotations. A hypothesis equal to
/// some annotator's corrected sentence takes that annotator's edits as is.
pub fn scored_items(pairs: &[AnnotatedPair], hyps: &[Sentence], extract: &ExtractConfig) -> Result<Vec<ScoredItem>> {
    if pairs.len() != hyps.len() {
        return Err(Error::config(format!(
            "{} gold sentences but {} hypotheses",
            pairs.len(),
            hyps.len()
        )));
    }
    Ok(pairs
        .iter()
        .zip(hyps)
        .map(|(p, h)| ScoredItem {
            hyp: annotator_edits_for(p, h).unwrap_or_else(|| extract_edits(&p.source, h, extract)),
            gold: p.gold.clone(),
        })
        .collect())
}

fn annotator_edits_for(p: &AnnotatedPair, hyp: &Sentence) -> Option<Vec<Edit>> {
    p.gold
        .iter()
        .find(|edits| apply_edits(&p.source, edits).is_ok_and(|t| &t == hyp))
        .cloned()
}

pub fn evaluate(
    pairs: &[AnnotatedPair],
    hyps: &[Sentence],
    extract: &ExtractConfig,
    cfg: &EditMatchConfig,
) -> Result<MetricsReport> {
    Ok(score(&scored_items(pairs, hyps, extract)?, cfg))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    DropSentences,
    #[default]
    DropEdits,
}

/// Rescoring with the `exclude` types removed, either by dropping every
/// sentence that has such a gold edit or by dropping the edits themselves
/// on both sides.
pub fn filter_eval(
    items: &[ScoredItem],
    exclude: &BTreeSet<ErrorType>,
    mode: FilterMode,
    cfg: &EditMatchConfig,
) -> Result<MetricsReport> {
    let kept: Vec<ScoredItem> = match mode {
        FilterMode::DropSentences => items
            .iter()
            .filter(|it| !it.gold.iter().flatten().any(|e| exclude.contains(&e.etype)))
            .cloned()
            .collect(),
        FilterMode::DropEdits => items
            .iter()
            .map(|it| ScoredItem {
                hyp: it.hyp.iter().filter(|e| !exclude.contains(&e.etype)).cloned().collect(),
                gold: it
                    .gold
                    .iter()
                    .map(|a| a.iter().filter(|e| !exclude.contains(&e.etype)).cloned().collect())
                    .collect(),
            })
            .collect(),
    };
    if !kept.iter().any(|it| it.gold.iter().any(|a| !a.is_empty())) {
        return Err(Error::EmptyEvaluation("no gold edits survive the filter".into()));
    }
    Ok(score(&kept, cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeShare {
    pub count: usize,
    pub pct: f64,
}

/// Percentage of annotator-0 gold edits per type, rounded to 2 decimals.
pub fn per_type_breakdown(pairs: &[AnnotatedPair]) -> Result<BTreeMap<String, TypeShare>> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in pairs {
        for e in p.canonical_edits() {
            *counts.entry(e.etype.to_string()).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyEvaluation("dataset has no gold edits".into()));
    }
    Ok(counts
        .into_iter()
        .map(|(t, count)| {
            let pct = (10_000.0 * count as f64 / total as f64).round() / 100.0;
            (t, TypeShare { count, pct })
        })
        .collect())
}

/// Scales to percent with two decimals.
pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub fn render_report(r: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}", "Type", "P", "R", "F0.5", "TP", "FP", "FN");
    let mut row = |name: &str, p: f64, r: f64, f: f64, c: &ConfusionCounts| {
        let _ = writeln!(
            out,
            "{:<8} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}",
            name,
            pct(p),
            pct(r),
            pct(f),
            c.tp,
            c.fp,
            c.fn_
        );
    };
    for (t, s) in &r.per_type {
        row(t, s.precision, s.recall, s.f05, &s.counts);
    }
    row("ALL", r.precision, r.recall, r.f05, &r.counts);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::LexiconSet;
    use crate::textcore::Mode;

    fn e(start: usize, end: usize, repl: &[&str], t: ErrorType) -> Edit {
        Edit::from_strs(start, end, repl, t)
    }

    #[test]
    fn prf_examples() {
        let r = prf(&ConfusionCounts::new(3, 1, 2, 0), 0.5);
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.6);
        assert!((r.f - 0.714_285_714_285_714_3).abs() < 1e-12);
        assert_eq!(prf(&ConfusionCounts::default(), 0.5).f, 0.0);
        let f = f_beta(0.792, 0.468, 0.5);
        assert!((100.0 * f - 69.6).abs() <= 0.15);
        assert!((f_beta(0.4, 0.4, 0.5) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn matching_examples() {
        let cfg = EditMatchConfig::default();
        let gold = vec![e(1, 2, &["have"], ErrorType::Sva), e(4, 4, &["."], ErrorType::Punct)];
        assert_eq!(match_edits(&gold, &[gold.clone()], &cfg), ConfusionCounts::new(2, 0, 0, 0));
        assert_eq!(match_edits(&[], &[gold.clone()], &cfg), ConfusionCounts::new(0, 0, 2, 0));

        let hyp = vec![e(1, 2, &["have"], ErrorType::Other)];
        let m = match_edits_detailed(&hyp, &[gold.clone(), hyp.clone()], &cfg);
        assert_eq!(m.annotator, 1);
        assert_eq!(m.counts, ConfusionCounts::new(1, 0, 0, 0));

        let typed = EditMatchConfig { type_sensitive: true };
        assert_eq!(match_edits(&hyp, &[gold], &typed), ConfusionCounts::new(0, 1, 2, 0));
    }

    #[test]
    fn ties_go_to_lower_annotator() {
        let cfg = EditMatchConfig::default();
        let a = vec![e(0, 1, &["x"], ErrorType::Other)];
        let b = vec![e(2, 3, &["y"], ErrorType::Other)];
        assert_eq!(match_edits_detailed(&[], &[a.clone(), b.clone()], &cfg).annotator, 0);
        assert_eq!(match_edits_detailed(&[], &[b, a], &cfg).annotator, 0);
    }

    fn pair(src: &str, edits: Vec<Edit>) -> AnnotatedPair {
        AnnotatedPair::single(Sentence::parse_joined(src, Mode::Word).unwrap(), edits).unwrap()
    }

    #[test]
    fn breakdown_examples() {
        let pairs = vec![
            pair("a b", vec![e(2, 2, &["."], ErrorType::Punct)]),
            pair("a , b", vec![e(1, 2, &[], ErrorType::Punct)]),
        ];
        let b = per_type_breakdown(&pairs).unwrap();
        assert_eq!(b["PUNCT"], TypeShare { count: 2, pct: 100.0 });
        assert!(matches!(per_type_breakdown(&[]), Err(Error::EmptyEvaluation(_))));
    }

    #[test]
    fn identical_hypotheses_score_perfectly() {
        let pairs = vec![
            pair("she go home", vec![e(1, 2, &["goes"], ErrorType::Sva), e(3, 3, &["."], ErrorType::Punct)]),
            pair("look to me .", vec![e(1, 2, &["at"], ErrorType::Prep)]),
            // adjacent gold edits that re-extraction would merge into one
            pair("a cat dog", vec![e(1, 2, &["cats"], ErrorType::Nn), e(2, 3, &["run"], ErrorType::Verb)]),
        ];
        let hyps: Vec<Sentence> = pairs.iter().map(|p| p.target.clone().unwrap()).collect();
        let extract = ExtractConfig::with_lexicon(LexiconSet::english());
        let r = evaluate(&pairs, &hyps, &extract, &EditMatchConfig::default()).unwrap();
        assert_eq!((r.precision, r.recall, r.f05), (1.0, 1.0, 1.0));
        assert!(render_report(&r).contains("100.00"));
    }

    #[test]
    fn filter_examples() {
        let cfg = EditMatchConfig::default();
        let items = vec![
            ScoredItem {
                hyp: vec![e(1, 2, &["goes"], ErrorType::Sva)],
                gold: vec![vec![e(1, 2, &["goes"], ErrorType::Sva), e(3, 3, &["."], ErrorType::Punct)]],
            },
            ScoredItem {
                hyp: vec![],
                gold: vec![vec![e(0, 1, &["at"], ErrorType::Prep)]],
            },
        ];
        let plain = score(&items, &cfg);
        assert_eq!(filter_eval(&items, &BTreeSet::new(), FilterMode::DropEdits, &cfg).unwrap(), plain);
        let punct: BTreeSet<ErrorType> = [ErrorType::Punct].into();
        let dropped = filter_eval(&items, &punct, FilterMode::DropEdits, &cfg).unwrap();
        assert!(dropped.recall >= plain.recall);
        assert_eq!(dropped.counts, ConfusionCounts::new(1, 0, 1, 0));
        let sentences = filter_eval(&items, &punct, FilterMode::DropSentences, &cfg).unwrap();
        assert_eq!(sentences.sentences, 1);
        let all: BTreeSet<ErrorType> = ErrorType::BUILTIN.into_iter().collect();
        assert!(matches!(
            filter_eval(&items, &all, FilterMode::DropEdits, &cfg),
            Err(Error::EmptyEvaluation(_))
        ));
    }
}
