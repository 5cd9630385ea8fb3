use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grammar::{Number, Piece, Role, SynthGrammar};
use crate::error::{Error, Result};
use crate::textcore::{Edit, ErrorType, Mode, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    AgreementBreak,
    DeterminerDrop,
    PrepositionSwap,
    PunctuationDrop,
    TokenSwap,
    CharTypo,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 6] = [
        ErrorKind::AgreementBreak,
        ErrorKind::DeterminerDrop,
        ErrorKind::PrepositionSwap,
        ErrorKind::PunctuationDrop,
        ErrorKind::TokenSwap,
        ErrorKind::CharTypo,
    ];

    /// Label carried by the gold edit of an injection of this kind.
    pub fn oracle_type(self) -> ErrorType {
        match self {
            ErrorKind::AgreementBreak => ErrorType::Sva,
            ErrorKind::DeterminerDrop => ErrorType::Det,
            ErrorKind::PrepositionSwap => ErrorType::Prep,
            ErrorKind::PunctuationDrop => ErrorType::Punct,
            ErrorKind::TokenSwap => ErrorType::Other,
            ErrorKind::CharTypo => ErrorType::Spell,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorInjectionSpec {
    pub kinds: BTreeMap<ErrorKind, f64>,
    /// Probability of injecting `i` errors at index `i`.
    pub errors_per_sentence: Vec<f64>,
}

const PROB_TOLERANCE: f64 = 1e-6;

impl ErrorInjectionSpec {
    fn preset(punct: f64, rest: [(ErrorKind, f64); 5]) -> Self {
        let mut kinds: BTreeMap<ErrorKind, f64> = rest.into_iter().collect();
        kinds.insert(ErrorKind::PunctuationDrop, punct);
        ErrorInjectionSpec {
            kinds,
            errors_per_sentence: vec![0.0, 0.7, 0.3],
        }
    }

    /// Punctuation-light mix: 7.6% punctuation drops.
    pub fn mix_a() -> Self {
        Self::preset(
            0.076,
            [
                (ErrorKind::AgreementBreak, 0.1204),
                (ErrorKind::DeterminerDrop, 0.2985),
                (ErrorKind::PrepositionSwap, 0.3063),
                (ErrorKind::CharTypo, 0.1595),
                (ErrorKind::TokenSwap, 0.0393),
            ],
        )
    }

    /// Punctuation-heavy mix: 16.7% punctuation drops.
    pub fn mix_b() -> Self {
        Self::preset(
            0.167,
            [
                (ErrorKind::AgreementBreak, 0.0459),
                (ErrorKind::DeterminerDrop, 0.2098),
                (ErrorKind::PrepositionSwap, 0.1679),
                (ErrorKind::CharTypo, 0.0933),
                (ErrorKind::TokenSwap, 0.3161),
            ],
        )
    }

    pub fn preset_named(name: &str) -> Result<Self> {
        match name {
            "mix-a" | "mix_a" | "a" => Ok(Self::mix_a()),
            "mix-b" | "mix_b" | "b" => Ok(Self::mix_b()),
            _ => Err(Error::config(format!("unknown injection preset {name:?}"))),
        }
    }

    /// Whole-sentence spec: exactly one error of one kind.
    pub fn single(kind: ErrorKind) -> Self {
        ErrorInjectionSpec {
            kinds: [(kind, 1.0)].into_iter().collect(),
            errors_per_sentence: vec![0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, probs) in [
            ("kinds", self.kinds.values().copied().collect::<Vec<_>>()),
            ("errors_per_sentence", self.errors_per_sentence.clone()),
        ] {
            if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::config(format!("{name}: probabilities must be >= 0")));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(Error::config(format!("{name}: probabilities sum to {sum}, not 1")));
            }
        }
        Ok(())
    }
}

fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut x = rng.gen::<f64>();
    for (i, p) in probs.iter().enumerate() {
        if x < *p {
            return i;
        }
        x -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Injection {
    pub corrupted: Sentence,
    /// Edits on `corrupted` that restore the original sentence.
    pub gold: Vec<Edit>,
    pub types: Vec<ErrorType>,
    pub kinds: Vec<ErrorKind>,
    /// Errors were requested but none could be placed.
    pub skipped: bool,
}

#[derive(Clone, Debug)]
enum Op {
    Delete,
    Replace(String),
    Swap,
}

struct Site {
    start: usize,
    end: usize,
    op: Op,
}

const MAX_DRAWS: usize = 8;
const MIN_TYPO_CHARS_WORD: usize = 4;
const MIN_TYPO_CHARS_CHAR: usize = 2;

/// Corrupts a sentence. Sentences the grammar cannot parse are treated
/// token by token, with roles guessed from the grammar's word lists.
pub fn inject(g: &SynthGrammar, s: &Sentence, spec: &ErrorInjectionSpec, seed: u64) -> Result<Injection> {
    spec.validate()?;
    let pieces = g.parse(s).unwrap_or_else(|| token_pieces(g, s));
    let words = g.words();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = sample_index(&mut rng, &spec.errors_per_sentence);
    let kinds: Vec<ErrorKind> = spec.kinds.keys().copied().collect();
    let probs: Vec<f64> = spec.kinds.values().copied().collect();

    let mut blocked = vec![false; pieces.len()];
    let mut placed: Vec<(Site, ErrorKind)> = Vec::new();
    for _ in 0..k {
        for _ in 0..MAX_DRAWS {
            let kind = kinds[sample_index(&mut rng, &probs)];
            let sites = candidate_sites(g, &pieces, &words, kind, &blocked, &mut rng);
            if sites.is_empty() {
                continue;
            }
            let idx = rng.gen_range(0..sites.len());
            let site = sites.into_iter().nth(idx).unwrap();
            for b in &mut blocked[site.start..site.end] {
                *b = true;
            }
            placed.push((site, kind));
            break;
        }
    }
    placed.sort_by_key(|(site, _)| site.start);

    let mut corrupted: Vec<String> = Vec::new();
    let mut gold = Vec::new();
    let mut types = Vec::new();
    let mut kinds_out = Vec::new();
    let mut i = 0;
    let mut next = placed.iter().peekable();
    while i < pieces.len() {
        match next.peek() {
            Some((site, kind)) if site.start == i => {
                let c = corrupted.len();
                let orig: Vec<String> = pieces[site.start..site.end]
                    .iter()
                    .flat_map(|p| g.tokens_of(&p.text))
                    .collect();
                match &site.op {
                    Op::Delete => {}
                    Op::Replace(w) => corrupted.extend(g.tokens_of(w)),
                    Op::Swap => {
                        corrupted.extend(g.tokens_of(&pieces[i + 1].text));
                        corrupted.extend(g.tokens_of(&pieces[i].text));
                    }
                }
                gold.push(Edit::new(c, corrupted.len(), orig, kind.oracle_type()));
                types.push(kind.oracle_type());
                kinds_out.push(*kind);
                i = site.end;
                next.next();
            }
            _ => {
                corrupted.extend(g.tokens_of(&pieces[i].text));
                i += 1;
            }
        }
    }
    let corrupted = Sentence::new(corrupted, s.mode())?;
    Ok(Injection {
        corrupted,
        gold,
        types,
        kinds: kinds_out,
        skipped: k > 0 && placed.is_empty(),
    })
}

fn token_pieces(g: &SynthGrammar, s: &Sentence) -> Vec<Piece> {
    let dets: HashSet<&str> = g
        .determiners
        .iter()
        .map(String::as_str)
        .chain((!g.subject_nouns.is_empty()).then_some(g.subject_det.as_str()))
        .collect();
    s.tokens()
        .iter()
        .map(|t| {
            let role = if let Some(vi) = g.verbs.iter().position(|v| v.sg == *t && v.pl != *t) {
                Role::Verb { verb: vi, number: Number::Sg }
            } else if let Some(vi) = g.verbs.iter().position(|v| v.pl == *t && v.sg != *t) {
                Role::Verb { verb: vi, number: Number::Pl }
            } else if g.is_punct_literal(t) {
                Role::Punct
            } else if dets.contains(t.as_str()) {
                Role::Det
            } else if g.prepositions.contains(t) {
                Role::Prep
            } else {
                Role::Noun
            };
            Piece {
                text: t.clone(),
                role,
            }
        })
        .collect()
}

fn free(blocked: &[bool], start: usize, end: usize) -> bool {
    !blocked[start..end].iter().any(|b| *b)
}

fn candidate_sites(
    g: &SynthGrammar,
    pieces: &[Piece],
    words: &HashSet<&str>,
    kind: ErrorKind,
    blocked: &[bool],
    rng: &mut ChaCha8Rng,
) -> Vec<Site> {
    let mut out = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        let one = |op| Site {
            start: i,
            end: i + 1,
            op,
        };
        match kind {
            ErrorKind::AgreementBreak => {
                if let Role::Verb { verb, number } = p.role {
                    let v = &g.verbs[verb];
                    if v.sg != v.pl {
                        let other = match number {
                            Number::Sg => &v.pl,
                            Number::Pl => &v.sg,
                        };
                        out.push(one(Op::Replace(other.clone())));
                    }
                }
            }
            ErrorKind::DeterminerDrop => {
                if matches!(p.role, Role::Det | Role::SubjectDet) {
                    out.push(one(Op::Delete));
                }
            }
            ErrorKind::PrepositionSwap => {
                if p.role == Role::Prep {
                    let others: Vec<&String> = g.prepositions.iter().filter(|q| **q != p.text).collect();
                    if !others.is_empty() {
                        let w = others[rng.gen_range(0..others.len())].clone();
                        out.push(one(Op::Replace(w)));
                    }
                }
            }
            ErrorKind::PunctuationDrop => {
                if p.role == Role::Punct && pieces.len() > 1 {
                    out.push(one(Op::Delete));
                }
            }
            ErrorKind::TokenSwap => {
                if let Some(q) = pieces.get(i + 1) {
                    if p.role != Role::Punct && q.role != Role::Punct && p.text != q.text {
                        out.push(Site {
                            start: i,
                            end: i + 2,
                            op: Op::Swap,
                        });
                    }
                }
            }
            ErrorKind::CharTypo => {
                if matches!(p.role, Role::Noun | Role::Adj | Role::Pred | Role::SubjectNoun) {
                    let variants = typo_variants(&p.text, g.mode, words);
                    if !variants.is_empty() {
                        let w = variants[rng.gen_range(0..variants.len())].clone();
                        out.push(one(Op::Replace(w)));
                    }
                }
            }
        }
    }
    out.retain(|s| free(blocked, s.start, s.end));
    out
}

/// One-character deletions and adjacent transpositions that are not
/// themselves grammar words, in a fixed order.
fn typo_variants(word: &str, mode: Mode, words: &HashSet<&str>) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let min = match mode {
        Mode::Word => MIN_TYPO_CHARS_WORD,
        Mode::Character => MIN_TYPO_CHARS_CHAR,
    };
    if chars.len() < min {
        return vec![];
    }
    let mut out: Vec<String> = Vec::new();
    for i in 0..chars.len() {
        let mut c = chars.clone();
        c.remove(i);
        out.push(c.into_iter().collect());
    }
    for i in 0..chars.len() - 1 {
        if chars[i] != chars[i + 1] {
            let mut c = chars.clone();
            c.swap(i, i + 1);
            out.push(c.into_iter().collect());
        }
    }
    let mut seen = HashSet::new();
    out.retain(|w| !w.is_empty() && !words.contains(w.as_str()) && seen.insert(w.clone()));
    out
}
