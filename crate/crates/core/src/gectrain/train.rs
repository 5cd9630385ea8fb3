use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decode::greedy_decode;
use super::loss::{ce_loss, dynamic_loss, loss_weight, CeOutput};
use super::model::Seq2SeqModel;
use crate::align::ExtractConfig;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::evalmetrics::{evaluate, EditMatchConfig};
use crate::judge::{AcceptabilityJudge, ColaScore};
use crate::textcore::{AnnotatedPair, Sentence};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    PlainCe,
    Dynamic,
}

/// Granularity at which the judge weight is applied in dynamic stages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    PerSentence,
    /// One weight per batch from the batch's mean judge score.
    PerBatch,
}

pub const DEFAULT_DYNAMIC_LR_MULTIPLIER: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainStage {
    pub name: String,
    pub dataset: String,
    pub epochs: usize,
    pub lr: f64,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default)]
    pub judge: Option<String>,
    /// Defaults to 2 for dynamic stages and 1 otherwise.
    #[serde(default)]
    pub lr_multiplier: Option<f64>,
    #[serde(default)]
    pub weighting: Weighting,
    /// Constant per-sentence weight for plain stages.
    #[serde(default = "one")]
    pub loss_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TrainStage {
    pub fn plain(name: &str, dataset: &str, epochs: usize, lr: f64) -> Self {
        TrainStage {
            name: name.into(),
            dataset: dataset.into(),
            epochs,
            lr,
            loss: LossKind::PlainCe,
            judge: None,
            lr_multiplier: None,
            weighting: Weighting::PerSentence,
            loss_scale: 1.0,
        }
    }

    pub fn dynamic(name: &str, dataset: &str, epochs: usize, lr: f64, judge: &str) -> Self {
        TrainStage {
            loss: LossKind::Dynamic,
            judge: Some(judge.into()),
            ..Self::plain(name, dataset, epochs, lr)
        }
    }

    pub fn effective_lr(&self) -> f64 {
        let mult = self.lr_multiplier.unwrap_or(match self.loss {
            LossKind::Dynamic => DEFAULT_DYNAMIC_LR_MULTIPLIER,
            LossKind::PlainCe => 1.0,
        });
        self.lr * mult
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Decode budget during dynamic stages and dev scoring is
    /// `max_len_ratio * source_len + max_len_slack`.
    pub max_len_ratio: f64,
    pub max_len_slack: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            clip_norm: 5.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            max_len_ratio: 1.5,
            max_len_slack: 5,
        }
    }
}

impl TrainConfig {
    pub fn max_len(&self, src_len: usize) -> usize {
        (self.max_len_ratio * src_len as f64).ceil() as usize + self.max_len_slack
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size must be at least 1"));
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return Err(Error::config("train.clip_norm must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("train.beta1 and train.beta2 must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// A judge together with the accuracy that enters the loss weight.
#[derive(Clone, Copy)]
pub struct Critic<'a> {
    pub judge: &'a dyn AcceptabilityJudge,
    pub acc: f64,
}

#[derive(Clone, Copy)]
pub struct DevSet<'a> {
    pub pairs: &'a [AnnotatedPair],
    pub extract: &'a ExtractConfig,
}

#[derive(Clone, Default)]
pub struct TrainData<'a> {
    pub datasets: BTreeMap<String, &'a [AnnotatedPair]>,
    pub judges: BTreeMap<String, Critic<'a>>,
    pub dev: Option<DevSet<'a>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub stage: String,
    /// Mean over sentences of the weighted sentence loss.
    pub mean_loss: f64,
    pub mean_weight: f64,
    pub dev_f05: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

struct Example {
    source: Sentence,
    src: Vec<u32>,
    tgt: Vec<u32>,
}

fn prepare(model: &Seq2SeqModel, pairs: &[AnnotatedPair]) -> Result<Vec<Example>> {
    pairs
        .iter()
        .map(|p| {
            let target = p.resolved_target()?;
            Ok(Example {
                src: model.vocab().encode(&p.source),
                tgt: model.vocab().encode(&target),
                source: p.source.clone(),
            })
        })
        .collect()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + cfg.adam_eps);
        }
    }
}

fn clip(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
}

/// Weighted sentence loss and its logit gradients.
fn sentence_loss(model: &Seq2SeqModel, ex: &Example, weight: Weight, grad: &mut [f64]) -> f64 {
    let fwd = model.forward(&ex.src, &ex.tgt);
    let probs = fwd.probs();
    let (total, ce): (f64, CeOutput) = match weight {
        Weight::Scale(w) => {
            let mut ce = ce_loss(&probs, &ex.tgt);
            for g in ce.grad_logits.iter_mut().flatten() {
                *g *= w;
            }
            (ce.loss * w, ce)
        }
        Weight::Judge(acc, score) => {
            let (b, ce) = dynamic_loss(&probs, &ex.tgt, acc, score);
            (b.total, ce)
        }
    };
    model.backward(&fwd, &ce.grad_logits, grad);
    total
}

#[derive(Clone, Copy)]
enum Weight {
    Scale(f64),
    Judge(f64, ColaScore),
}

impl Weight {
    fn value(self) -> f64 {
        match self {
            Weight::Scale(w) => w,
            Weight::Judge(acc, s) => loss_weight(acc, s),
        }
    }
}

/// Greedy-decodes every pair and scores the output at the edit level.
pub fn dev_f05(model: &Seq2SeqModel, dev: &DevSet<'_>, cfg: &TrainConfig) -> Result<f64> {
    let hyps: Vec<Sentence> = dev
        .pairs
        .iter()
        .map(|p| greedy_decode(model, &p.source, cfg.max_len(p.source.len())).sentence)
        .collect();
    Ok(evaluate(dev.pairs, &hyps, dev.extract, &EditMatchConfig::default())?.f05)
}

fn check_stages(stages: &[TrainStage], data: &TrainData<'_>) -> Result<()> {
    for s in stages {
        if !data.datasets.contains_key(&s.dataset) {
            return Err(Error::config(format!("stage {:?}: unknown dataset {:?}", s.name, s.dataset)));
        }
        if data.datasets[&s.dataset].is_empty() {
            return Err(Error::config(format!("stage {:?}: dataset {:?} is empty", s.name, s.dataset)));
        }
        if !(s.effective_lr().is_finite() && s.effective_lr() > 0.0) {
            return Err(Error::config(format!("stage {:?}: learning rate must be positive", s.name)));
        }
        if !(s.loss_scale.is_finite() && s.loss_scale > 0.0) {
            return Err(Error::config(format!("stage {:?}: loss_scale must be positive", s.name)));
        }
        if s.loss == LossKind::Dynamic {
            let Some(j) = &s.judge else {
                return Err(Error::config(format!("stage {:?}: dynamic loss needs a judge", s.name)));
            };
            let Some(c) = data.judges.get(j) else {
                return Err(Error::config(format!("stage {:?}: unknown judge {j:?}", s.name)));
            };
            if !(0.0..=1.0).contains(&c.acc) {
                return Err(Error::config(format!("judge {j:?}: accuracy {} outside [0, 1]", c.acc)));
            }
        }
    }
    Ok(())
}

/// Runs `stages` in order on `model`. Each stage gets a fresh optimizer;
/// batch order is drawn from the config seed and the global epoch index.
pub fn train(model: &mut Seq2SeqModel, stages: &[TrainStage], data: &TrainData<'_>, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    check_stages(stages, data)?;
    let mut log = TrainLog::default();
    let mut global_epoch = 0u64;
    for stage in stages {
        let examples = prepare(model, data.datasets[&stage.dataset])?;
        let critic = match stage.loss {
            LossKind::Dynamic => Some(data.judges[stage.judge.as_ref().expect("checked")]),
            LossKind::PlainCe => None,
        };
        let lr = stage.effective_lr();
        let mut adam = Adam::new(model.num_params());
        let mut grad = vec![0.0; model.num_params()];
        for epoch in 1..=stage.epochs {
            let mut order: Vec<usize> = (0..examples.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, global_epoch)));
            global_epoch += 1;
            let mut loss_sum = 0.0;
            let mut weight_sum = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let weights = batch_weights(model, &examples, batch, stage, critic, cfg)?;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (&i, &w) in batch.iter().zip(&weights) {
                    loss_sum += sentence_loss(model, &examples[i], w, &mut grad);
                    weight_sum += w.value();
                }
                let inv = 1.0 / batch.len() as f64;
                grad.iter_mut().for_each(|g| *g *= inv);
                clip(&mut grad, cfg.clip_norm);
                adam.step(model.params_mut(), &grad, lr, cfg);
            }
            let n = examples.len() as f64;
            let dev = match &data.dev {
                Some(d) => Some(dev_f05(model, d, cfg)?),
                None => None,
            };
            log.records.push(EpochRecord {
                epoch,
                stage: stage.name.clone(),
                mean_loss: loss_sum / n,
                mean_weight: weight_sum / n,
                dev_f05: dev,
            });
        }
    }
    Ok(log)
}

fn batch_weights(
    model: &Seq2SeqModel,
    examples: &[Example],
    batch: &[usize],
    stage: &TrainStage,
    critic: Option<Critic<'_>>,
    cfg: &TrainConfig,
) -> Result<Vec<Weight>> {
    let Some(c) = critic else {
        return Ok(vec![Weight::Scale(stage.loss_scale); batch.len()]);
    };
    let scores = batch
        .iter()
        .map(|&i| {
            let ex = &examples[i];
            let hyp = greedy_decode(model, &ex.source, cfg.max_len(ex.source.len()));
            c.judge.score(&hyp.sentence)
        })
        .collect::<Result<Vec<ColaScore>>>()?;
    Ok(match stage.weighting {
        Weighting::PerSentence => scores.into_iter().map(|s| Weight::Judge(c.acc, s)).collect(),
        Weighting::PerBatch => {
            let mean = scores.iter().map(|s| s.value()).sum::<f64>() / scores.len() as f64;
            vec![Weight::Scale((c.acc * mean).sqrt()); batch.len()]
        }
    })
}
