//! Edit extraction from (source, target) sentence pairs: a cost-minimizing
//! token alignment with transpositions, a merge policy that turns alignment
//! runs into edits, and a rule-based error-type classifier.

mod classify;
mod lexicon;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::textcore::{Edit, ErrorType, Sentence};

pub use classify::classify_edit;
pub use lexicon::LexiconSet;

const COST_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    Match,
    Substitute,
    Transpose,
    Delete,
    Insert,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignOp {
    pub kind: OpKind,
    pub src: Range<usize>,
    pub tgt: Range<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    pub insert: f64,
    pub delete: f64,
    /// Substitution cost is `substitute + (1 - similarity) * dissimilarity_weight`.
    pub substitute: f64,
    pub dissimilarity_weight: f64,
    pub case_only: f64,
    pub transpose: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            insert: 1.0,
            delete: 1.0,
            substitute: 1.0,
            dissimilarity_weight: 0.5,
            case_only: 0.25,
            transpose: 0.9,
        }
    }
}

impl CostConfig {
    pub fn substitution(&self, a: &str, b: &str) -> f64 {
        if a.to_lowercase() == b.to_lowercase() {
            return self.case_only;
        }
        let la = a.chars().count();
        let lb = b.chars().count();
        let dist = char_distance(a, b) as f64;
        let similarity = 1.0 - dist / la.max(lb).max(1) as f64;
        self.substitute + (1.0 - similarity) * self.dissimilarity_weight
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn char_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

/// One minimum-cost alignment of `src` onto `tgt`.
///
/// Among equal-cost predecessors the backtrace prefers, in order, match,
/// substitute, transpose, delete and insert.
pub fn align_tokens(src: &Sentence, tgt: &Sentence, costs: &CostConfig) -> Vec<AlignOp> {
    let s = src.tokens();
    let t = tgt.tokens();
    let (n, m) = (s.len(), t.len());
    let w = m + 1;
    let mut dp = vec![f64::INFINITY; (n + 1) * w];
    dp[0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for (_, prev, cost) in candidates(s, t, i, j, costs) {
                best = best.min(dp[prev.0 * w + prev.1] + cost);
            }
            dp[i * w + j] = best;
        }
    }

    let mut ops = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        let (kind, prev, cost) = candidates(s, t, i, j, costs)
            .into_iter()
            .find(|(_, prev, cost)| (dp[prev.0 * w + prev.1] + cost - here).abs() <= COST_EPS)
            .expect("dp cell has an optimal predecessor");
        ops.push(AlignOp {
            kind,
            src: prev.0..i,
            tgt: prev.1..j,
            cost,
        });
        (i, j) = prev;
    }
    ops.reverse();
    ops
}

/// Predecessor transitions into cell `(i, j)`, in tie-break preference order.
fn candidates(
    s: &[String],
    t: &[String],
    i: usize,
    j: usize,
    costs: &CostConfig,
) -> Vec<(OpKind, (usize, usize), f64)> {
    let mut out = Vec::with_capacity(4);
    if i > 0 && j > 0 {
        if s[i - 1] == t[j - 1] {
            out.push((OpKind::Match, (i - 1, j - 1), 0.0));
        } else {
            out.push((
                OpKind::Substitute,
                (i - 1, j - 1),
                costs.substitution(&s[i - 1], &t[j - 1]),
            ));
        }
    }
    if i > 1
        && j > 1
        && s[i - 2] == t[j - 1]
        && s[i - 1] == t[j - 2]
        && s[i - 2] != s[i - 1]
    {
        out.push((OpKind::Transpose, (i - 2, j - 2), costs.transpose));
    }
    if i > 0 {
        out.push((OpKind::Delete, (i - 1, j), costs.delete));
    }
    if j > 0 {
        out.push((OpKind::Insert, (i, j - 1), costs.insert));
    }
    out
}

pub fn alignment_cost(ops: &[AlignOp]) -> f64 {
    ops.iter().map(|o| o.cost).sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    AllSplit,
    #[default]
    MergeAdjacent,
}

/// Turns non-match alignment ops into edits labelled `OTHER` (classification
/// happens separately). A transposition is always one edit of its own.
pub fn merge_alignment(ops: &[AlignOp], tgt: &Sentence, policy: MergePolicy) -> Vec<Edit> {
    let t = tgt.tokens();
    let to_edit = |src: Range<usize>, tgt: Range<usize>| {
        Edit::new(src.start, src.end, t[tgt].to_vec(), ErrorType::Other)
    };
    let mut edits = Vec::new();
    let mut run: Option<(Range<usize>, Range<usize>)> = None;
    for op in ops {
        match (op.kind, policy) {
            (OpKind::Match, _) => {
                if let Some((s, g)) = run.take() {
                    edits.push(to_edit(s, g));
                }
            }
            (OpKind::Transpose, _) | (_, MergePolicy::AllSplit) => {
                if let Some((s, g)) = run.take() {
                    edits.push(to_edit(s, g));
                }
                edits.push(to_edit(op.src.clone(), op.tgt.clone()));
            }
            (_, MergePolicy::MergeAdjacent) => {
                run = Some(match run.take() {
                    Some((s, g)) => (s.start..op.src.end, g.start..op.tgt.end),
                    None => (op.src.clone(), op.tgt.clone()),
                });
            }
        }
    }
    if let Some((s, g)) = run {
        edits.push(to_edit(s, g));
    }
    edits
}

#[derive(Clone, Debug, Default)]
pub struct ExtractConfig {
    pub costs: CostConfig,
    pub policy: MergePolicy,
    pub lexicon: LexiconSet,
}

impl ExtractConfig {
    pub fn with_lexicon(lexicon: LexiconSet) -> Self {
        ExtractConfig {
            lexicon,
            ..Default::default()
        }
    }
}

/// Typed edits transforming `src` into `tgt`. Applying the result to `src`
/// always reproduces `tgt`.
pub fn extract_edits(src: &Sentence, tgt: &Sentence, cfg: &ExtractConfig) -> Vec<Edit> {
    let ops = align_tokens(src, tgt, &cfg.costs);
    let mut edits = merge_alignment(&ops, tgt, cfg.policy);
    for e in &mut edits {
        e.etype = classify_edit(e, src, &cfg.lexicon);
    }
    edits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::{apply_edits, Mode};

    fn s(text: &str) -> Sentence {
        Sentence::parse_joined(text, Mode::Word).unwrap()
    }

    fn kinds(ops: &[AlignOp]) -> Vec<OpKind> {
        ops.iter().map(|o| o.kind).collect()
    }

    #[test]
    fn char_distance_basics() {
        assert_eq!(char_distance("", "abc"), 3);
        assert_eq!(char_distance("kitten", "sitting"), 3);
        assert_eq!(char_distance("recieve", "receive"), 2);
        assert_eq!(char_distance("好的", "好"), 1);
    }

    #[test]
    fn substitution_costs() {
        let c = CostConfig::default();
        assert_eq!(c.substitution("she", "She"), 0.25);
        // dist(has, have) = 2 over max length 4
        assert!((c.substitution("has", "have") - 1.25).abs() < 1e-12);
        assert!((c.substitution("ab", "xy") - 1.5).abs() < 1e-12);
    }

    #[test]
    fn aligns_single_substitution() {
        let ops = align_tokens(&s("I has a dog"), &s("I have a dog"), &CostConfig::default());
        assert_eq!(
            kinds(&ops),
            vec![OpKind::Match, OpKind::Substitute, OpKind::Match, OpKind::Match]
        );
        assert_eq!(ops[1].src, 1..2);
        assert_eq!(ops[1].tgt, 1..2);
    }

    #[test]
    fn identical_sentences_all_match() {
        let x = s("the cat sat on the mat");
        let ops = align_tokens(&x, &x, &CostConfig::default());
        assert!(ops.iter().all(|o| o.kind == OpKind::Match));
        assert_eq!(alignment_cost(&ops), 0.0);
    }

    #[test]
    fn swapped_pair_is_one_transpose() {
        let ops = align_tokens(&s("b a"), &s("a b"), &CostConfig::default());
        assert_eq!(kinds(&ops), vec![OpKind::Transpose]);
        assert_eq!(ops[0].cost, 0.9);
    }

    #[test]
    fn empty_inputs() {
        let e = Sentence::empty(Mode::Word);
        assert!(align_tokens(&e, &e, &CostConfig::default()).is_empty());
        let ops = align_tokens(&e, &s("a b"), &CostConfig::default());
        assert_eq!(kinds(&ops), vec![OpKind::Insert, OpKind::Insert]);
    }

    #[test]
    fn ambiguous_insertion_goes_left() {
        let edits = merge_alignment(
            &align_tokens(&s("a"), &s("a a"), &CostConfig::default()),
            &s("a a"),
            MergePolicy::MergeAdjacent,
        );
        assert_eq!(edits.len(), 1);
        assert_eq!((edits[0].start, edits[0].end), (0, 0));
    }

    #[test]
    fn merge_policies() {
        let src = s("a x y b");
        let tgt = s("a p q b");
        let ops = align_tokens(&src, &tgt, &CostConfig::default());
        assert_eq!(
            kinds(&ops),
            vec![OpKind::Match, OpKind::Substitute, OpKind::Substitute, OpKind::Match]
        );
        let merged = merge_alignment(&ops, &tgt, MergePolicy::MergeAdjacent);
        assert_eq!(merged, vec![Edit::from_strs(1, 3, &["p", "q"], ErrorType::Other)]);
        let split = merge_alignment(&ops, &tgt, MergePolicy::AllSplit);
        assert_eq!(split.len(), 2);
        let same = align_tokens(&src, &src, &CostConfig::default());
        assert!(merge_alignment(&same, &src, MergePolicy::MergeAdjacent).is_empty());
    }

    #[test]
    fn transposition_is_not_merged_with_neighbours() {
        let src = s("x b a");
        let tgt = s("y a b");
        let ops = align_tokens(&src, &tgt, &CostConfig::default());
        let edits = merge_alignment(&ops, &tgt, MergePolicy::MergeAdjacent);
        assert_eq!(edits.len(), 2);
        assert_eq!((edits[1].start, edits[1].end), (1, 3));
    }

    #[test]
    fn extract_examples() {
        let cfg = ExtractConfig::with_lexicon(LexiconSet::english());
        let src = s("I has a dog .");
        let tgt = s("I have a dog .");
        let edits = extract_edits(&src, &tgt, &cfg);
        assert_eq!(edits.len(), 1);
        assert_eq!((edits[0].start, edits[0].end), (1, 2));
        assert_eq!(edits[0].replacement, vec!["have"]);
        // has/have is within the typo distance, so without an inflection
        // table the SPELL rule fires first.
        assert_eq!(edits[0].etype, ErrorType::Spell);

        let mut with_table = cfg.clone();
        with_table.lexicon.add_inflection(ErrorType::Sva, "has", "have");
        assert_eq!(extract_edits(&src, &tgt, &with_table)[0].etype, ErrorType::Sva);

        assert!(extract_edits(&src, &src, &cfg).is_empty());

        let edits = extract_edits(&s("I have a dog"), &s("I have a dog ."), &cfg);
        assert_eq!(edits, vec![Edit::from_strs(4, 4, &["."], ErrorType::Punct)]);
        assert_eq!(apply_edits(&s("I have a dog"), &edits).unwrap(), s("I have a dog ."));
    }
}
