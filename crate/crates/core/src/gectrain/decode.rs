use std::cmp::Ordering;

use super::model::{Encoding, Seq2SeqModel};
use super::vocab::{BOS, EOS, PAD, UNK};
use crate::error::{Error, Result};
use crate::judge::AcceptabilityJudge;
use crate::textcore::Sentence;

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub sentence: Sentence,
    pub ids: Vec<u32>,
    /// Sum of token log-probabilities, EOS included when emitted.
    pub logprob: f64,
    /// Generation stopped at `max_len` without emitting EOS.
    pub truncated: bool,
}

impl Hypothesis {
    /// Log-probability per generated token, counting EOS as a token.
    pub fn normalized_logprob(&self) -> f64 {
        self.logprob / (self.ids.len() + 1) as f64
    }
}

fn emittable(id: usize) -> bool {
    id as u32 != PAD && id as u32 != BOS
}

/// Source token under the attention peak, ignoring the trailing EOS slot.
fn copy_source(src: &Sentence, attention: &[f64]) -> Option<String> {
    let n = src.len().min(attention.len());
    let mut best: Option<usize> = None;
    for j in 0..n {
        if best.is_none_or(|b| attention[j] > attention[b]) {
            best = Some(j);
        }
    }
    best.map(|j| src.tokens()[j].clone())
}

fn surface(model: &Seq2SeqModel, src: &Sentence, id: u32, attention: &[f64]) -> String {
    if id == UNK {
        if let Some(t) = copy_source(src, attention) {
            return t;
        }
    }
    model.vocab().token(id).to_string()
}

fn finish(model: &Seq2SeqModel, ids: Vec<u32>, tokens: Vec<String>, logprob: f64, truncated: bool) -> Hypothesis {
    debug_assert_eq!(ids.len(), tokens.len());
    let mode = model.vocab().mode();
    let sentence = Sentence::new(tokens, mode).unwrap_or_else(|_| Sentence::empty(mode));
    Hypothesis {
        sentence,
        ids,
        logprob,
        truncated,
    }
}

fn encode_source(model: &Seq2SeqModel, src: &Sentence) -> Encoding {
    model.encode(&model.vocab().encode(src))
}

/// Argmax decoding, ties to the lowest id. UNK outputs copy the most
/// attended source token.
pub fn greedy_decode(model: &Seq2SeqModel, src: &Sentence, max_len: usize) -> Hypothesis {
    let enc = encode_source(model, src);
    let mut state = model.initial_state(&enc);
    let mut prev = BOS;
    let mut ids = Vec::new();
    let mut tokens = Vec::new();
    let mut logprob = 0.0;
    loop {
        if ids.len() >= max_len {
            return finish(model, ids, tokens, logprob, true);
        }
        let out = model.step(&enc, &state, prev);
        let mut best = EOS as usize;
        let mut best_lp = logprob + out.probs[best].ln();
        for (i, &p) in out.probs.iter().enumerate() {
            let lp = logprob + p.ln();
            if emittable(i) && lp > best_lp {
                best = i;
                best_lp = lp;
            }
        }
        logprob = best_lp;
        let id = best as u32;
        if id == EOS {
            return finish(model, ids, tokens, logprob, false);
        }
        tokens.push(surface(model, src, id, &out.attention));
        ids.push(id);
        state = out.state;
        prev = id;
    }
}

struct Live {
    ids: Vec<u32>,
    tokens: Vec<String>,
    logprob: f64,
    state: Vec<f64>,
}

fn by_score_then_ids(a: (f64, &[u32], u32), b: (f64, &[u32], u32)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.iter().chain([&a.2]).cmp(b.1.iter().chain([&b.2])))
}

/// Hypotheses sorted by descending log-probability, ties by token strings.
fn sort_hypotheses(h: &mut [Hypothesis]) {
    h.sort_by(|a, b| {
        b.logprob
            .partial_cmp(&a.logprob)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.sentence.tokens().cmp(b.sentence.tokens()))
    });
}

/// Beam search returning up to `k` hypotheses, best first. With `k == 1`
/// this reproduces [`greedy_decode`].
pub fn beam_decode(model: &Seq2SeqModel, src: &Sentence, k: usize, max_len: usize) -> Result<Vec<Hypothesis>> {
    if k == 0 {
        return Err(Error::config("beam size must be at least 1"));
    }
    let enc = encode_source(model, src);
    let mut live = vec![Live {
        ids: Vec::new(),
        tokens: Vec::new(),
        logprob: 0.0,
        state: model.initial_state(&enc),
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    while !live.is_empty() && finished.len() < k {
        let (at_limit, rest): (Vec<Live>, Vec<Live>) = live.into_iter().partition(|l| l.ids.len() >= max_len);
        for l in at_limit {
            finished.push(finish(model, l.ids, l.tokens, l.logprob, true));
        }
        if rest.is_empty() || finished.len() >= k {
            break;
        }
        let outs: Vec<_> = rest
            .iter()
            .map(|l| model.step(&enc, &l.state, l.ids.last().copied().unwrap_or(BOS)))
            .collect();
        let mut cands: Vec<(f64, usize, u32)> = Vec::new();
        for (h, out) in outs.iter().enumerate() {
            for (i, &p) in out.probs.iter().enumerate() {
                if emittable(i) {
                    cands.push((rest[h].logprob + p.ln(), h, i as u32));
                }
            }
        }
        cands.sort_by(|a, b| by_score_then_ids((a.0, &rest[a.1].ids, a.2), (b.0, &rest[b.1].ids, b.2)));
        let mut next = Vec::new();
        for &(lp, h, id) in cands.iter().take(k - finished.len()) {
            let parent = &rest[h];
            if id == EOS {
                finished.push(finish(model, parent.ids.clone(), parent.tokens.clone(), lp, false));
            } else {
                let mut ids = parent.ids.clone();
                ids.push(id);
                let mut tokens = parent.tokens.clone();
                tokens.push(surface(model, src, id, &outs[h].attention));
                next.push(Live {
                    ids,
                    tokens,
                    logprob: lp,
                    state: outs[h].state.clone(),
                });
            }
        }
        live = next;
    }
    sort_hypotheses(&mut finished);
    finished.truncate(k);
    Ok(finished)
}

/// Picks the hypothesis maximising `normalized_logprob - lambda * score`,
/// where a higher judge score means less acceptable. Candidates are first put
/// in canonical n-best order, which also breaks ties, so the result does not
/// depend on input order. A zero `lambda` returns the canonical first entry.
pub fn rerank_with_cola(nbest: &[Hypothesis], judge: &dyn AcceptabilityJudge, lambda: f64) -> Result<Hypothesis> {
    if nbest.is_empty() {
        return Err(Error::config("cannot rerank an empty n-best list"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::config(format!("rerank lambda must be finite and >= 0, got {lambda}")));
    }
    let mut ranked = nbest.to_vec();
    sort_hypotheses(&mut ranked);
    if lambda == 0.0 {
        return Ok(ranked.swap_remove(0));
    }
    let mut best = 0;
    let mut best_obj = f64::NEG_INFINITY;
    for (i, h) in ranked.iter().enumerate() {
        let obj = h.normalized_logprob() - lambda * judge.score(&h.sentence)?.value();
        if obj > best_obj {
            best = i;
            best_obj = obj;
        }
    }
    Ok(ranked.swap_remove(best))
}
