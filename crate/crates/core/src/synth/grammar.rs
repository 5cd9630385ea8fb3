use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::LexiconSet;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::textcore::{ErrorType, Mode, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Sg,
    Pl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pronoun {
    pub word: String,
    pub number: Number,
}

/// A verb with its agreement forms, followed by an optional predicate word
/// and the one preposition it governs (either may be empty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verb {
    pub sg: String,
    pub pl: String,
    #[serde(default)]
    pub pred: String,
    #[serde(default)]
    pub prep: String,
}

impl Verb {
    pub fn form(&self, n: Number) -> &str {
        match n {
            Number::Sg => &self.sg,
            Number::Pl => &self.pl,
        }
    }
}

/// Sequence of items: `CLAUSE`, `TIME`, `END`, or a literal word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub items: Vec<String>,
    pub weight: f64,
}

/// A small generative grammar. A clause is
/// `SUBJ VERB [PRED] [PREP] DET [ADJ] NOUN`, where the subject is a pronoun
/// or `subject_det` plus a subject noun, and the verb agrees with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthGrammar {
    pub mode: Mode,
    pub pronouns: Vec<Pronoun>,
    pub pronoun_prob: f64,
    pub subject_det: String,
    /// `(singular, plural)`.
    pub subject_nouns: Vec<(String, String)>,
    pub verbs: Vec<Verb>,
    pub determiners: Vec<String>,
    pub adjectives: Vec<String>,
    pub adj_prob: f64,
    pub nouns: Vec<String>,
    /// Pool that preposition swaps draw from.
    pub prepositions: Vec<String>,
    pub times: Vec<Vec<String>>,
    pub end_punct: Vec<String>,
    pub templates: Vec<Template>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Pronoun,
    SubjectDet,
    SubjectNoun,
    Verb { verb: usize, number: Number },
    Pred,
    Prep,
    Det,
    Adj,
    Noun,
    Time,
    Punct,
    Literal,
}

/// One grammar word and the role it plays in its sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    pub role: Role,
}

impl Piece {
    fn new(text: &str, role: Role) -> Self {
        Piece {
            text: text.to_string(),
            role,
        }
    }
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn template(items: &[&str], weight: f64) -> Template {
    Template {
        items: strs(items),
        weight,
    }
}

impl SynthGrammar {
    /// English-like default. Pronouns and nouns are chosen so that subject
    /// number and verb form meet within a few characters, and each predicate
    /// word pairs with exactly one preposition.
    pub fn english() -> Self {
        let pron = |w: &str, n| Pronoun {
            word: w.to_string(),
            number: n,
        };
        let verb = |sg: &str, pl: &str, pred: &str, prep: &str| Verb {
            sg: sg.into(),
            pl: pl.into(),
            pred: pred.into(),
            prep: prep.into(),
        };
        let mut verbs = Vec::new();
        for (pred, prep) in [
            ("afraid", "of"),
            ("keen", "on"),
            ("famous", "for"),
            ("similar", "to"),
            ("aware", "of"),
            ("ready", "for"),
            ("excellent", "at"),
            ("full", "of"),
        ] {
            verbs.push(verb("is", "are", pred, prep));
            verbs.push(verb("was", "were", pred, prep));
        }
        SynthGrammar {
            mode: Mode::Word,
            pronouns: vec![
                pron("he", Number::Sg),
                pron("she", Number::Sg),
                pron("it", Number::Sg),
                pron("they", Number::Pl),
                pron("you", Number::Pl),
            ],
            pronoun_prob: 0.35,
            subject_det: "the".into(),
            subject_nouns: [
                ("dog", "dogs"),
                ("cat", "cats"),
                ("girl", "girls"),
                ("teacher", "teachers"),
                ("student", "students"),
                ("doctor", "doctors"),
                ("farmer", "farmers"),
                ("pilot", "pilots"),
            ]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
            verbs,
            determiners: strs(&["the"]),
            adjectives: strs(&["big", "small", "red", "old", "new"]),
            adj_prob: 0.3,
            nouns: strs(&[
                "house", "garden", "river", "market", "window", "bridge", "forest", "kitchen",
                "tower", "castle", "mountain", "picture",
            ]),
            prepositions: strs(&["of", "on", "for", "to", "at"]),
            times: vec![
                strs(&["today"]),
                strs(&["yesterday"]),
                strs(&["now"]),
                strs(&["last", "week"]),
                strs(&["last", "year"]),
            ],
            end_punct: strs(&[".", "!"]),
            templates: vec![
                template(&["CLAUSE", "END"], 0.4),
                template(&["TIME", ",", "CLAUSE", "END"], 0.2),
                template(&["CLAUSE", "TIME", "END"], 0.2),
                template(&["CLAUSE", "and", "CLAUSE", "END"], 0.2),
            ],
        }
    }

    /// Character-mode grammar with CJK words; there is no agreement and no
    /// governed preposition, so only the other error kinds apply.
    pub fn character() -> Self {
        let verb = |v: &str| Verb {
            sg: v.into(),
            pl: v.into(),
            pred: String::new(),
            prep: String::new(),
        };
        SynthGrammar {
            mode: Mode::Character,
            pronouns: ["我", "你", "他", "她", "我们", "他们"]
                .iter()
                .map(|w| Pronoun {
                    word: w.to_string(),
                    number: Number::Sg,
                })
                .collect(),
            pronoun_prob: 1.0,
            subject_det: String::new(),
            subject_nouns: vec![],
            verbs: ["喜欢", "看见", "打扫", "需要", "想要"].iter().map(|v| verb(v)).collect(),
            determiners: strs(&["这个", "那个"]),
            adjectives: strs(&["漂亮", "干净", "安静"]),
            adj_prob: 0.3,
            nouns: strs(&["房间", "花园", "城市", "学校", "图书馆", "公园"]),
            prepositions: vec![],
            times: vec![strs(&["今天"]), strs(&["昨天"]), strs(&["现在"])],
            end_punct: strs(&["。", "！"]),
            templates: vec![
                template(&["CLAUSE", "END"], 0.5),
                template(&["TIME", "，", "CLAUSE", "END"], 0.5),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("grammar: {msg}")))
            }
        };
        check(!self.templates.is_empty(), "no templates")?;
        let mut uses = HashSet::new();
        for t in &self.templates {
            check(!t.items.is_empty(), "empty template")?;
            check(t.weight.is_finite() && t.weight >= 0.0, "template weight must be >= 0")?;
            for item in &t.items {
                check(!item.is_empty(), "empty template item")?;
                uses.insert(item.as_str());
            }
        }
        check(self.templates.iter().any(|t| t.weight > 0.0), "all template weights are zero")?;
        if uses.contains("CLAUSE") {
            check(
                !self.pronouns.is_empty() || !self.subject_nouns.is_empty(),
                "slot SUBJ is empty",
            )?;
            check(!self.verbs.is_empty(), "slot VERB is empty")?;
            check(!self.determiners.is_empty(), "slot DET is empty")?;
            check(!self.nouns.is_empty(), "slot NOUN is empty")?;
            check(
                self.subject_nouns.is_empty() || !self.subject_det.is_empty(),
                "subject nouns need a subject_det",
            )?;
            check(
                self.adj_prob == 0.0 || !self.adjectives.is_empty(),
                "slot ADJ is empty but adj_prob > 0",
            )?;
        }
        if uses.contains("TIME") {
            check(!self.times.is_empty(), "slot TIME is empty")?;
        }
        if uses.contains("END") {
            check(!self.end_punct.is_empty(), "slot END is empty")?;
        }
        for p in [self.pronoun_prob, self.adj_prob] {
            check((0.0..=1.0).contains(&p), "probabilities must be in [0, 1]")?;
        }
        for w in self.words() {
            check(
                !w.is_empty() && !w.contains(char::is_whitespace),
                "words must be non-empty and contain no whitespace",
            )?;
        }
        Ok(())
    }

    /// Every word the grammar can emit.
    pub fn words(&self) -> HashSet<&str> {
        let mut out: HashSet<&str> = HashSet::new();
        out.extend(self.pronouns.iter().map(|p| p.word.as_str()));
        if !self.subject_nouns.is_empty() {
            out.insert(&self.subject_det);
        }
        for (a, b) in &self.subject_nouns {
            out.insert(a);
            out.insert(b);
        }
        for v in &self.verbs {
            out.insert(&v.sg);
            out.insert(&v.pl);
            if !v.pred.is_empty() {
                out.insert(&v.pred);
            }
            if !v.prep.is_empty() {
                out.insert(&v.prep);
            }
        }
        for list in [&self.determiners, &self.adjectives, &self.nouns, &self.prepositions, &self.end_punct] {
            out.extend(list.iter().map(String::as_str));
        }
        for t in &self.times {
            out.extend(t.iter().map(String::as_str));
        }
        for t in &self.templates {
            out.extend(
                t.items
                    .iter()
                    .filter(|i| !matches!(i.as_str(), "CLAUSE" | "TIME" | "END"))
                    .map(String::as_str),
            );
        }
        out
    }

    /// Lexicon for the edit classifier: the English defaults plus this
    /// grammar's closed classes, with verb forms as SVA and subject noun
    /// forms as NN inflections.
    pub fn lexicon(&self) -> LexiconSet {
        let mut lex = LexiconSet::english();
        lex.determiners.extend(self.determiners.iter().cloned());
        if !self.subject_nouns.is_empty() {
            lex.determiners.insert(self.subject_det.clone());
        }
        lex.prepositions.extend(self.prepositions.iter().cloned());
        lex.prepositions
            .extend(self.verbs.iter().filter(|v| !v.prep.is_empty()).map(|v| v.prep.clone()));
        lex.punctuation.extend(self.end_punct.iter().cloned());
        for v in &self.verbs {
            if v.sg != v.pl {
                lex.add_inflection(ErrorType::Sva, &v.sg, &v.pl);
            }
        }
        for (a, b) in &self.subject_nouns {
            if a != b {
                lex.add_inflection(ErrorType::Nn, a, b);
            }
        }
        lex
    }

    pub(crate) fn is_punct_literal(&self, w: &str) -> bool {
        self.end_punct.iter().any(|p| p == w) || LexiconSet::english().is_punct(w)
    }

    pub fn render(&self, pieces: &[Piece]) -> Sentence {
        let tokens: Vec<String> = pieces.iter().flat_map(|p| self.tokens_of(&p.text)).collect();
        Sentence::new(tokens, self.mode).expect("grammar words are valid tokens")
    }

    pub(crate) fn tokens_of(&self, word: &str) -> Vec<String> {
        match self.mode {
            Mode::Word => vec![word.to_string()],
            Mode::Character => word.chars().map(String::from).collect(),
        }
    }

    fn sample_template<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a Template {
        let total: f64 = self.templates.iter().map(|t| t.weight).sum();
        let mut x = rng.gen::<f64>() * total;
        for t in &self.templates {
            if x < t.weight {
                return t;
            }
            x -= t.weight;
        }
        self.templates.iter().rev().find(|t| t.weight > 0.0).unwrap()
    }

    /// One sentence as tagged pieces. Assumes a validated grammar.
    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Vec<Piece> {
        let pick = |rng: &mut ChaCha8Rng, v: &[String]| v[rng.gen_range(0..v.len())].clone();
        let t = self.sample_template(rng);
        let mut out = Vec::new();
        for item in &t.items {
            match item.as_str() {
                "CLAUSE" => self.generate_clause(rng, &mut out),
                "TIME" => {
                    let time = &self.times[rng.gen_range(0..self.times.len())];
                    out.extend(time.iter().map(|w| Piece::new(w, Role::Time)));
                }
                "END" => out.push(Piece::new(&pick(rng, &self.end_punct), Role::Punct)),
                lit => out.push(Piece::new(lit, self.literal_role(lit))),
            }
        }
        out
    }

    fn literal_role(&self, lit: &str) -> Role {
        if self.is_punct_literal(lit) {
            Role::Punct
        } else {
            Role::Literal
        }
    }

    fn generate_clause(&self, rng: &mut ChaCha8Rng, out: &mut Vec<Piece>) {
        let use_pronoun = !self.pronouns.is_empty()
            && (self.subject_nouns.is_empty() || rng.gen::<f64>() < self.pronoun_prob);
        let number = if use_pronoun {
            let p = &self.pronouns[rng.gen_range(0..self.pronouns.len())];
            out.push(Piece::new(&p.word, Role::Pronoun));
            p.number
        } else {
            let (sg, pl) = &self.subject_nouns[rng.gen_range(0..self.subject_nouns.len())];
            out.push(Piece::new(&self.subject_det, Role::SubjectDet));
            if rng.gen::<bool>() {
                out.push(Piece::new(pl, Role::SubjectNoun));
                Number::Pl
            } else {
                out.push(Piece::new(sg, Role::SubjectNoun));
                Number::Sg
            }
        };
        let vi = rng.gen_range(0..self.verbs.len());
        self.push_predicate(vi, number, out);
        let det = &self.determiners[rng.gen_range(0..self.determiners.len())];
        out.push(Piece::new(det, Role::Det));
        if !self.adjectives.is_empty() && rng.gen::<f64>() < self.adj_prob {
            let adj = &self.adjectives[rng.gen_range(0..self.adjectives.len())];
            out.push(Piece::new(adj, Role::Adj));
        }
        out.push(Piece::new(&self.nouns[rng.gen_range(0..self.nouns.len())], Role::Noun));
    }

    fn push_predicate(&self, vi: usize, number: Number, out: &mut Vec<Piece>) {
        let v = &self.verbs[vi];
        out.push(Piece::new(v.form(number), Role::Verb { verb: vi, number }));
        if !v.pred.is_empty() {
            out.push(Piece::new(&v.pred, Role::Pred));
        }
        if !v.prep.is_empty() {
            out.push(Piece::new(&v.prep, Role::Prep));
        }
    }

    pub fn generate_sentence(&self, rng: &mut ChaCha8Rng) -> Sentence {
        self.render(&self.generate(rng))
    }

    /// Recovers the pieces of a sentence this grammar can generate, or
    /// `None` if it cannot. Doubles as the validity checker.
    pub fn parse(&self, s: &Sentence) -> Option<Vec<Piece>> {
        if s.mode() != self.mode {
            return None;
        }
        let toks = s.tokens();
        for t in &self.templates {
            let mut out = Vec::new();
            if self.match_items(&t.items, toks, 0, &mut out) {
                return Some(out);
            }
        }
        None
    }

    pub fn is_valid(&self, s: &Sentence) -> bool {
        self.parse(s).is_some()
    }

    fn eat(&self, toks: &[String], pos: usize, word: &str) -> Option<usize> {
        match self.mode {
            Mode::Word => (toks.get(pos).map(String::as_str) == Some(word)).then_some(pos + 1),
            Mode::Character => {
                let mut p = pos;
                for c in word.chars() {
                    let t = toks.get(p)?;
                    let mut it = t.chars();
                    if it.next() != Some(c) || it.next().is_some() {
                        return None;
                    }
                    p += 1;
                }
                Some(p)
            }
        }
    }

    fn match_items(&self, items: &[String], toks: &[String], pos: usize, out: &mut Vec<Piece>) -> bool {
        let Some((item, rest)) = items.split_first() else {
            return pos == toks.len();
        };
        let mark = out.len();
        let alternatives: Vec<(Vec<Piece>, usize)> = match item.as_str() {
            "CLAUSE" => self.match_clause(toks, pos),
            "TIME" => self
                .times
                .iter()
                .filter_map(|t| {
                    let mut p = pos;
                    for w in t {
                        p = self.eat(toks, p, w)?;
                    }
                    Some((t.iter().map(|w| Piece::new(w, Role::Time)).collect(), p))
                })
                .collect(),
            "END" => self
                .end_punct
                .iter()
                .filter_map(|w| self.eat(toks, pos, w).map(|p| (vec![Piece::new(w, Role::Punct)], p)))
                .collect(),
            lit => self
                .eat(toks, pos, lit)
                .map(|p| (vec![Piece::new(lit, self.literal_role(lit))], p))
                .into_iter()
                .collect(),
        };
        for (pieces, p) in alternatives {
            out.extend(pieces);
            if self.match_items(rest, toks, p, out) {
                return true;
            }
            out.truncate(mark);
        }
        false
    }

    fn match_clause(&self, toks: &[String], pos: usize) -> Vec<(Vec<Piece>, usize)> {
        let mut subjects: Vec<(Vec<Piece>, Number, usize)> = Vec::new();
        for p in &self.pronouns {
            if let Some(e) = self.eat(toks, pos, &p.word) {
                subjects.push((vec![Piece::new(&p.word, Role::Pronoun)], p.number, e));
            }
        }
        if !self.subject_nouns.is_empty() {
            if let Some(d) = self.eat(toks, pos, &self.subject_det) {
                for (sg, pl) in &self.subject_nouns {
                    for (w, n) in [(sg, Number::Sg), (pl, Number::Pl)] {
                        if let Some(e) = self.eat(toks, d, w) {
                            let pieces = vec![
                                Piece::new(&self.subject_det, Role::SubjectDet),
                                Piece::new(w, Role::SubjectNoun),
                            ];
                            subjects.push((pieces, n, e));
                        }
                    }
                }
            }
        }

        let mut out = Vec::new();
        for (subj, number, e) in subjects {
            for (vi, v) in self.verbs.iter().enumerate() {
                let mut pieces = subj.clone();
                let Some(p) = self.eat_predicate(toks, e, vi, v, number, &mut pieces) else {
                    continue;
                };
                for det in &self.determiners {
                    let Some(p) = self.eat(toks, p, det) else { continue };
                    let mut with_det = pieces.clone();
                    with_det.push(Piece::new(det, Role::Det));
                    let mut starts = vec![(with_det.clone(), p)];
                    for adj in &self.adjectives {
                        if let Some(q) = self.eat(toks, p, adj) {
                            let mut w = with_det.clone();
                            w.push(Piece::new(adj, Role::Adj));
                            starts.push((w, q));
                        }
                    }
                    for (base, q) in starts {
                        for n in &self.nouns {
                            if let Some(r) = self.eat(toks, q, n) {
                                let mut w = base.clone();
                                w.push(Piece::new(n, Role::Noun));
                                out.push((w, r));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn eat_predicate(
        &self,
        toks: &[String],
        pos: usize,
        vi: usize,
        v: &Verb,
        number: Number,
        pieces: &mut Vec<Piece>,
    ) -> Option<usize> {
        let mut p = self.eat(toks, pos, v.form(number))?;
        pieces.push(Piece::new(v.form(number), Role::Verb { verb: vi, number }));
        if !v.pred.is_empty() {
            p = self.eat(toks, p, &v.pred)?;
            pieces.push(Piece::new(&v.pred, Role::Pred));
        }
        if !v.prep.is_empty() {
            p = self.eat(toks, p, &v.prep)?;
            pieces.push(Piece::new(&v.prep, Role::Prep));
        }
        Some(p)
    }
}

/// `n` grammar-valid sentences; sentence `i` depends only on `(seed, i)`.
pub fn gen_corpus(g: &SynthGrammar, n: usize, seed: u64) -> Result<Vec<Sentence>> {
    g.validate()?;
    if n == 0 {
        return Err(Error::config("gen_corpus needs n >= 1"));
    }
    Ok((0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            g.generate_sentence(&mut rng)
        })
        .collect())
}
