//! Tokens, sentences, edits and acceptability instances, plus the M2 and
//! COLA TSV interchange formats.
//!
//! Sentences are stored pre-tokenized. In every serialized form tokens are
//! joined by a single ASCII space, which keeps round trips byte-exact.

mod m2;
mod tsv;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use m2::{emit_m2, parse_m2};
pub use tsv::{emit_cola_tsv, parse_cola_tsv};

pub const TOKEN_SEPARATOR: char = ' ';

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Word,
    Character,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<String>,
    mode: Mode,
}

impl Sentence {
    /// Builds a sentence from tokens, rejecting empty tokens and tokens that
    /// contain the separator.
    pub fn new(tokens: Vec<String>, mode: Mode) -> Result<Self> {
        for t in &tokens {
            check_token(t)?;
        }
        Ok(Sentence { tokens, mode })
    }

    pub fn from_strs(tokens: &[&str], mode: Mode) -> Result<Self> {
        Self::new(tokens.iter().map(|t| t.to_string()).collect(), mode)
    }

    pub fn empty(mode: Mode) -> Self {
        Sentence {
            tokens: Vec::new(),
            mode,
        }
    }

    /// Splits a separator-joined line. Unlike [`tokenize`], consecutive
    /// separators are an error: the line must already be canonical.
    pub fn parse_joined(line: &str, mode: Mode) -> Result<Self> {
        if line.is_empty() {
            return Ok(Self::empty(mode));
        }
        Self::new(
            line.split(TOKEN_SEPARATOR).map(str::to_string).collect(),
            mode,
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined())
    }
}

fn check_token(t: &str) -> Result<()> {
    if t.is_empty() {
        return Err(Error::InvalidToken {
            token: t.to_string(),
            reason: "token is empty",
        });
    }
    if t.contains(char::is_whitespace) {
        return Err(Error::InvalidToken {
            token: t.to_string(),
            reason: "token contains whitespace",
        });
    }
    Ok(())
}

/// Word mode splits on runs of whitespace; character mode yields one token
/// per non-whitespace character.
pub fn tokenize(raw: &str, mode: Mode) -> Result<Sentence> {
    let tokens: Vec<String> = match mode {
        Mode::Word => raw.split_whitespace().map(str::to_string).collect(),
        Mode::Character => raw
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    };
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    Ok(Sentence { tokens, mode })
}

/// Error-type labels. The fixed variants cover the categories the analysis
/// tooling reports on; `Custom` carries any other label verbatim (for example
/// ERRANT's `R:VERB:TENSE`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorType {
    Punct,
    Orth,
    Spell,
    Det,
    Prep,
    Sva,
    Nn,
    Verb,
    Other,
    Custom(String),
}

impl ErrorType {
    pub const BUILTIN: [ErrorType; 9] = [
        ErrorType::Punct,
        ErrorType::Orth,
        ErrorType::Spell,
        ErrorType::Det,
        ErrorType::Prep,
        ErrorType::Sva,
        ErrorType::Nn,
        ErrorType::Verb,
        ErrorType::Other,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            ErrorType::Punct => "PUNCT",
            ErrorType::Orth => "ORTH",
            ErrorType::Spell => "SPELL",
            ErrorType::Det => "DET",
            ErrorType::Prep => "PREP",
            ErrorType::Sva => "SVA",
            ErrorType::Nn => "NN",
            ErrorType::Verb => "VERB",
            ErrorType::Other => "OTHER",
            ErrorType::Custom(s) => s,
        }
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.contains(char::is_whitespace) || s.contains('|') {
            return Err(Error::config(format!("invalid error type label {s:?}")));
        }
        Ok(match s {
            "PUNCT" => ErrorType::Punct,
            "ORTH" => ErrorType::Orth,
            "SPELL" => ErrorType::Spell,
            "DET" => ErrorType::Det,
            "PREP" => ErrorType::Prep,
            "SVA" => ErrorType::Sva,
            "NN" => ErrorType::Nn,
            "VERB" => ErrorType::Verb,
            "OTHER" => ErrorType::Other,
            other => ErrorType::Custom(other.to_string()),
        })
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ErrorType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ErrorType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A span replacement on a tokenized source sentence: tokens
/// `start..end` are replaced by `replacement`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    pub etype: ErrorType,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: Vec<String>, etype: ErrorType) -> Self {
        Edit {
            start,
            end,
            replacement,
            etype,
        }
    }

    pub fn from_strs(start: usize, end: usize, replacement: &[&str], etype: ErrorType) -> Self {
        Self::new(
            start,
            end,
            replacement.iter().map(|s| s.to_string()).collect(),
            etype,
        )
    }

    pub fn is_null(&self) -> bool {
        self.start == self.end && self.replacement.is_empty()
    }

    /// Span and correction equality, ignoring the type label.
    pub fn same_correction(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }
}

/// Checks the edit-set contract: every edit non-null and within bounds,
/// and for consecutive edits `prev.end <= next.start`. Several insertions at
/// the same position are allowed and apply in list order.
pub fn validate_edits(source_len: usize, edits: &[Edit]) -> Result<()> {
    let mut prev_end = 0usize;
    for (i, e) in edits.iter().enumerate() {
        if e.start > e.end || e.end > source_len {
            return Err(Error::InvalidEditSet(format!(
                "edit {i} span {}..{} out of bounds for {source_len} tokens",
                e.start, e.end
            )));
        }
        if e.is_null() {
            return Err(Error::InvalidEditSet(format!(
                "edit {i} at {} is a null edit",
                e.start
            )));
        }
        for t in &e.replacement {
            check_token(t).map_err(|err| Error::InvalidEditSet(format!("edit {i}: {err}")))?;
        }
        if e.start < prev_end {
            return Err(Error::InvalidEditSet(format!(
                "edit {i} span {}..{} overlaps or precedes the previous edit ending at {prev_end}",
                e.start, e.end
            )));
        }
        prev_end = e.end;
    }
    Ok(())
}

/// Applies a sorted, non-overlapping edit list right to left.
pub fn apply_edits(source: &Sentence, edits: &[Edit]) -> Result<Sentence> {
    validate_edits(source.len(), edits)?;
    let mut tokens = source.tokens.clone();
    for e in edits.iter().rev() {
        tokens.splice(e.start..e.end, e.replacement.iter().cloned());
    }
    Ok(Sentence {
        tokens,
        mode: source.mode,
    })
}

/// A source sentence with per-annotator gold edit lists.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedPair {
    pub source: Sentence,
    pub target: Option<Sentence>,
    pub gold: Vec<Vec<Edit>>,
    pub annotator_ids: Vec<u32>,
}

impl AnnotatedPair {
    /// A single-annotator pair whose target is derived from the edits.
    pub fn single(source: Sentence, edits: Vec<Edit>) -> Result<Self> {
        let target = apply_edits(&source, &edits)?;
        Ok(AnnotatedPair {
            source,
            target: Some(target),
            gold: vec![edits],
            annotator_ids: vec![0],
        })
    }

    pub fn canonical_edits(&self) -> &[Edit] {
        self.gold.first().map(Vec::as_slice).unwrap_or(&[])
    }

    /// The stored target, or annotator 0's edits applied to the source.
    pub fn resolved_target(&self) -> Result<Sentence> {
        match &self.target {
            Some(t) => Ok(t.clone()),
            None => apply_edits(&self.source, self.canonical_edits()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gold.len() != self.annotator_ids.len() {
            return Err(Error::InvalidEditSet(format!(
                "{} edit lists for {} annotators",
                self.gold.len(),
                self.annotator_ids.len()
            )));
        }
        for edits in &self.gold {
            validate_edits(self.source.len(), edits)?;
        }
        if let Some(t) = &self.target {
            if apply_edits(&self.source, self.canonical_edits())? != *t {
                return Err(Error::InvalidEditSet(
                    "annotator 0 edits do not reproduce the target".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Unacceptable = 0,
    Acceptable = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Unacceptable),
            1 => Some(Label::Acceptable),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Linguistics,
    GecSource,
    GecTarget,
    Synthetic,
}

impl Origin {
    pub const ALL: [Origin; 4] = [
        Origin::Linguistics,
        Origin::GecSource,
        Origin::GecTarget,
        Origin::Synthetic,
    ];

    pub fn is_gec(self) -> bool {
        matches!(self, Origin::GecSource | Origin::GecTarget)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Linguistics => "linguistics",
            Origin::GecSource => "gec_source",
            Origin::GecTarget => "gec_target",
            Origin::Synthetic => "synthetic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColaInstance {
    pub sentence: Sentence,
    pub label: Label,
    pub origin: Origin,
}

impl ColaInstance {
    pub fn new(sentence: Sentence, label: Label, origin: Origin) -> Self {
        ColaInstance {
            sentence,
            label,
            origin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(toks: &[&str]) -> Sentence {
        Sentence::from_strs(toks, Mode::Word).unwrap()
    }

    #[test]
    fn tokenize_word_mode() {
        assert_eq!(
            tokenize("I have a dog .", Mode::Word).unwrap(),
            s(&["I", "have", "a", "dog", "."])
        );
        assert_eq!(tokenize("a  b", Mode::Word).unwrap(), s(&["a", "b"]));
    }

    #[test]
    fn tokenize_character_mode() {
        let sent = tokenize("好的", Mode::Character).unwrap();
        assert_eq!(sent.tokens(), &["好", "的"]);
        assert_eq!(sent.mode(), Mode::Character);
        let spaced = tokenize("好 的", Mode::Character).unwrap();
        assert_eq!(spaced.tokens(), &["好", "的"]);
    }

    #[test]
    fn tokenize_rejects_blank() {
        assert!(matches!(tokenize("", Mode::Word), Err(Error::EmptySentence)));
        assert!(matches!(
            tokenize(" \t ", Mode::Character),
            Err(Error::EmptySentence)
        ));
    }

    #[test]
    fn sentence_rejects_bad_tokens() {
        assert!(Sentence::from_strs(&["a", ""], Mode::Word).is_err());
        assert!(Sentence::from_strs(&["a b"], Mode::Word).is_err());
    }

    #[test]
    fn apply_single_substitution() {
        let out = apply_edits(
            &s(&["I", "has", "a", "dog"]),
            &[Edit::from_strs(1, 2, &["have"], ErrorType::Sva)],
        )
        .unwrap();
        assert_eq!(out, s(&["I", "have", "a", "dog"]));
    }

    #[test]
    fn apply_empty_is_identity() {
        let src = s(&["x", "y"]);
        assert_eq!(apply_edits(&src, &[]).unwrap(), src);
    }

    #[test]
    fn apply_substitution_and_append() {
        let out = apply_edits(
            &s(&["She", "go", "home"]),
            &[
                Edit::from_strs(1, 2, &["goes"], ErrorType::Sva),
                Edit::from_strs(3, 3, &["."], ErrorType::Punct),
            ],
        )
        .unwrap();
        assert_eq!(out, s(&["She", "goes", "home", "."]));
    }

    #[test]
    fn apply_same_position_insertions_in_order() {
        let out = apply_edits(
            &s(&["a"]),
            &[
                Edit::from_strs(1, 1, &["x"], ErrorType::Other),
                Edit::from_strs(1, 1, &["y"], ErrorType::Other),
            ],
        )
        .unwrap();
        assert_eq!(out, s(&["a", "x", "y"]));
    }

    #[test]
    fn apply_rejects_invalid_sets() {
        let src = s(&["a", "b", "c"]);
        let overlap = [
            Edit::from_strs(0, 2, &["x"], ErrorType::Other),
            Edit::from_strs(1, 3, &["y"], ErrorType::Other),
        ];
        assert!(matches!(
            apply_edits(&src, &overlap),
            Err(Error::InvalidEditSet(_))
        ));
        let oob = [Edit::from_strs(2, 4, &["x"], ErrorType::Other)];
        assert!(matches!(
            apply_edits(&src, &oob),
            Err(Error::InvalidEditSet(_))
        ));
        let null = [Edit::from_strs(1, 1, &[], ErrorType::Other)];
        assert!(matches!(
            apply_edits(&src, &null),
            Err(Error::InvalidEditSet(_))
        ));
    }

    #[test]
    fn error_type_labels_round_trip() {
        for t in ErrorType::BUILTIN {
            assert_eq!(t.as_str().parse::<ErrorType>().unwrap(), t);
        }
        assert_eq!(
            "R:VERB:TENSE".parse::<ErrorType>().unwrap(),
            ErrorType::Custom("R:VERB:TENSE".into())
        );
    }
}
