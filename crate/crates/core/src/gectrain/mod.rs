//! Attention seq2seq corrector: losses, staged training, decoding and
//! judge-based n-best reranking.

mod decode;
mod loss;
mod model;
mod train;
mod vocab;

pub use decode::{beam_decode, greedy_decode, rerank_with_cola, Hypothesis};
pub use loss::{ce_loss, dynamic_loss, loss_weight, CeOutput, LossBreakdown, PROB_FLOOR};
pub use model::{Encoding, Forward, ModelConfig, Seq2SeqModel, StepOutput};
pub use train::{
    dev_f05, train, Critic, DevSet, EpochRecord, LossKind, TrainConfig, TrainData, TrainLog, TrainStage, Weighting,
    DEFAULT_DYNAMIC_LR_MULTIPLIER,
};
pub use vocab::{Vocab, BOS, EOS, PAD, SPECIALS, UNK};

use crate::textcore::AnnotatedPair;

/// Vocabulary over the sources and resolved targets of `pairs`.
pub fn build_vocab(pairs: &[AnnotatedPair], min_count: usize) -> crate::Result<Vocab> {
    let mode = pairs.first().map(|p| p.source.mode()).unwrap_or_default();
    let mut all = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        all.push(p.source.clone());
        all.push(p.resolved_target()?);
    }
    Ok(Vocab::build(&all, min_count, mode))
}
