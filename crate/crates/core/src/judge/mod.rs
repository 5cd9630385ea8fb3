//! The acceptability judge: a logistic model over hashed character n-grams,
//! the sigmoid COLA score of its two logits, and classifier metrics.
//!
//! External classifiers can stand in for the built-in model through
//! [`LogitsTable`], which serves precomputed logits keyed by sentence.

mod features;
mod metrics;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colacorpus::Corpus;
use crate::error::{Error, Result};
use crate::textcore::{ColaInstance, Label, Sentence};

pub use features::{featurize, FeatureConfig, SparseFeatures};
pub use metrics::{acc, mcc, ConfusionCounts};

/// Scores for category 0 (unacceptable) and category 1 (acceptable).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Logits {
    pub logit0: f64,
    pub logit1: f64,
}

impl Logits {
    pub fn new(logit0: f64, logit1: f64) -> Self {
        Logits { logit0, logit1 }
    }
}

/// Sigmoid of `logit0 - logit1`. Larger means less acceptable. Always
/// strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColaScore(f64);

impl ColaScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

const SCORE_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn cola_score(l: Logits) -> Result<ColaScore> {
    if !l.logit0.is_finite() || !l.logit1.is_finite() {
        return Err(Error::InvalidLogits {
            logit0: l.logit0,
            logit1: l.logit1,
        });
    }
    let v = sigmoid(l.logit0 - l.logit1);
    Ok(ColaScore(v.clamp(f64::MIN_POSITIVE, SCORE_MAX)))
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Anything that can produce acceptability logits for a sentence.
pub trait AcceptabilityJudge: Sync {
    fn logits(&self, s: &Sentence) -> Result<Logits>;

    fn score(&self, s: &Sentence) -> Result<ColaScore> {
        cola_score(self.logits(s)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeHyper {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    /// `None` trains full-batch; otherwise shuffled mini-batches of this size.
    pub batch_size: Option<usize>,
    pub features: FeatureConfig,
}

impl Default for JudgeHyper {
    fn default() -> Self {
        JudgeHyper {
            lr: 1.0,
            epochs: 100,
            l2: 1e-6,
            seed: 0,
            batch_size: Some(32),
            features: FeatureConfig::default(),
        }
    }
}

/// Trained acceptability model. `logit1 = w·x + b1`, `logit0 = b0`.
#[derive(Clone, Debug, PartialEq)]
pub struct JudgeModel {
    features: FeatureConfig,
    weights: Vec<f64>,
    bias: [f64; 2],
    seed: u64,
    epochs: usize,
    dev_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JudgeTrainLog {
    /// Mean regularized training loss at the start of each epoch, plus the final value.
    pub epoch_loss: Vec<f64>,
    pub dev_counts: ConfusionCounts,
    pub dev_accuracy: f64,
    pub dev_mcc: f64,
}

struct Encoded {
    x: SparseFeatures,
    y: f64,
}

impl JudgeModel {
    pub fn feature_config(&self) -> &FeatureConfig {
        &self.features
    }

    /// Accuracy on the dev split, measured once when training finished.
    pub fn dev_accuracy(&self) -> f64 {
        self.dev_accuracy
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> [f64; 2] {
        self.bias
    }

    fn margin(&self, x: &SparseFeatures) -> f64 {
        x.dot(&self.weights) + self.bias[1] - self.bias[0]
    }

    pub fn predict(&self, s: &Sentence) -> Label {
        let l = self.logits_unchecked(s);
        if l.logit1 > l.logit0 {
            Label::Acceptable
        } else {
            Label::Unacceptable
        }
    }

    fn logits_unchecked(&self, s: &Sentence) -> Logits {
        let x = featurize(s, &self.features);
        Logits::new(self.bias[0], x.dot(&self.weights) + self.bias[1])
    }

    /// Confusion counts with "acceptable" as the positive class.
    pub fn evaluate(&self, instances: &[ColaInstance]) -> ConfusionCounts {
        let gold: Vec<bool> = instances.iter().map(|i| i.label == Label::Acceptable).collect();
        let pred: Vec<bool> = instances
            .iter()
            .map(|i| self.predict(&i.sentence) == Label::Acceptable)
            .collect();
        ConfusionCounts::from_predictions(&gold, &pred)
    }

    pub fn to_json(&self) -> String {
        let weights: Vec<(u32, f64)> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| (i as u32, *w))
            .collect();
        let file = JudgeFile {
            format: JUDGE_FORMAT.to_string(),
            version: JUDGE_VERSION,
            hash_dim: self.features.hash_dim,
            ngram_min: self.features.ngram_min,
            ngram_max: self.features.ngram_max,
            bias: self.bias,
            seed: self.seed,
            epochs: self.epochs,
            dev_accuracy: self.dev_accuracy,
            weights,
        };
        serde_json::to_string(&file).expect("judge model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: JudgeFile = serde_json::from_str(text)
            .map_err(|e| Error::format(e.line(), format!("judge model: {e}")))?;
        if file.format != JUDGE_FORMAT || file.version != JUDGE_VERSION {
            return Err(Error::config(format!(
                "unsupported judge model format {} v{}",
                file.format, file.version
            )));
        }
        let features = FeatureConfig {
            hash_dim: file.hash_dim,
            ngram_min: file.ngram_min,
            ngram_max: file.ngram_max,
        };
        features.validate()?;
        let mut weights = vec![0.0; features.hash_dim];
        for (i, w) in file.weights {
            let slot = weights
                .get_mut(i as usize)
                .ok_or_else(|| Error::config(format!("weight index {i} beyond hash_dim")))?;
            *slot = w;
        }
        Ok(JudgeModel {
            features,
            weights,
            bias: file.bias,
            seed: file.seed,
            epochs: file.epochs,
            dev_accuracy: file.dev_accuracy,
        })
    }
}

impl AcceptabilityJudge for JudgeModel {
    fn logits(&self, s: &Sentence) -> Result<Logits> {
        Ok(self.logits_unchecked(s))
    }
}

const JUDGE_FORMAT: &str = "colagec-judge";
const JUDGE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgeFile {
    format: String,
    version: u32,
    hash_dim: usize,
    ngram_min: usize,
    ngram_max: usize,
    bias: [f64; 2],
    seed: u64,
    epochs: usize,
    dev_accuracy: f64,
    weights: Vec<(u32, f64)>,
}

/// Trains the judge by gradient descent on the logistic loss and freezes
/// its dev-set accuracy into the model.
pub fn train_judge(corpus: &Corpus, hyper: &JudgeHyper) -> Result<(JudgeModel, JudgeTrainLog)> {
    hyper.features.validate()?;
    if corpus.train.is_empty() || corpus.dev.is_empty() {
        return Err(Error::DegenerateCorpus(
            "train and dev splits must be non-empty".into(),
        ));
    }
    let positives = corpus.train.iter().filter(|i| i.label == Label::Acceptable).count();
    if positives == 0 || positives == corpus.train.len() {
        return Err(Error::DegenerateCorpus(
            "training split contains a single label".into(),
        ));
    }
    if hyper.batch_size == Some(0) {
        return Err(Error::config("judge batch_size must be positive"));
    }

    let data: Vec<Encoded> = corpus
        .train
        .iter()
        .map(|i| Encoded {
            x: featurize(&i.sentence, &hyper.features),
            y: if i.label == Label::Acceptable { 1.0 } else { 0.0 },
        })
        .collect();

    let mut model = JudgeModel {
        features: hyper.features.clone(),
        weights: vec![0.0; hyper.features.hash_dim],
        bias: [0.0; 2],
        seed: hyper.seed,
        epochs: hyper.epochs,
        dev_accuracy: 0.0,
    };
    let mut log = JudgeTrainLog::default();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; hyper.features.hash_dim];

    for _ in 0..hyper.epochs {
        match hyper.batch_size {
            None => {
                let loss = gradient_step(&mut model, &data, &order, hyper, &mut grad);
                log.epoch_loss.push(loss);
            }
            Some(bs) => {
                log.epoch_loss.push(objective(&model, &data, hyper.l2));
                order.shuffle(&mut rng);
                minibatch_epoch(&mut model, &data, &order, bs, hyper, &mut grad);
            }
        }
    }
    log.epoch_loss.push(objective(&model, &data, hyper.l2));

    let counts = model.evaluate(&corpus.dev);
    model.dev_accuracy = acc(&counts)?;
    log.dev_counts = counts;
    log.dev_accuracy = model.dev_accuracy;
    log.dev_mcc = mcc(&counts)?;
    Ok((model, log))
}

/// Mean logistic loss plus `l2/2 * |w|^2` over `batch`. Writes the weight
/// gradient into `grad` and returns `(loss, d loss / d b1)`; the gradient
/// for `b0` is the negation.
fn loss_and_grad(model: &JudgeModel, data: &[Encoded], batch: &[usize], l2: f64, grad: &mut [f64]) -> (f64, f64) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut bias_grad = 0.0;
    for &i in batch {
        let ex = &data[i];
        let z = model.margin(&ex.x);
        loss += if ex.y > 0.5 { softplus(-z) } else { softplus(z) };
        let g = sigmoid(z) - ex.y;
        bias_grad += g;
        ex.x.add_scaled_to(grad, g);
    }
    let mut sq = 0.0;
    for (g, w) in grad.iter_mut().zip(&model.weights) {
        sq += w * w;
        *g = *g / n + l2 * w;
    }
    (loss / n + 0.5 * l2 * sq, bias_grad / n)
}

/// One full-gradient descent step; returns the pre-step loss.
fn gradient_step(
    model: &mut JudgeModel,
    data: &[Encoded],
    batch: &[usize],
    hyper: &JudgeHyper,
    grad: &mut [f64],
) -> f64 {
    let (loss, bias_grad) = loss_and_grad(model, data, batch, hyper.l2, grad);
    for (w, g) in model.weights.iter_mut().zip(grad.iter()) {
        *w -= hyper.lr * g;
    }
    model.bias[1] -= hyper.lr * bias_grad;
    model.bias[0] += hyper.lr * bias_grad;
    loss
}

/// One pass of mini-batch steps. Weight decay is folded into a running
/// scale so each step only touches the features present in its batch.
fn minibatch_epoch(
    model: &mut JudgeModel,
    data: &[Encoded],
    order: &[usize],
    bs: usize,
    hyper: &JudgeHyper,
    grad: &mut [f64],
) {
    let mut scale = 1.0;
    let mut touched: Vec<u32> = Vec::new();
    let decay = 1.0 - hyper.lr * hyper.l2;
    for chunk in order.chunks(bs) {
        let n = chunk.len() as f64;
        touched.clear();
        let mut bias_grad = 0.0;
        for &i in chunk {
            let ex = &data[i];
            let z = scale * ex.x.dot(&model.weights) + model.bias[1] - model.bias[0];
            let g = sigmoid(z) - ex.y;
            bias_grad += g;
            for &(j, v) in &ex.x.entries {
                grad[j as usize] += g * v;
                touched.push(j);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        scale *= decay;
        let step = hyper.lr / n / scale;
        for &j in &touched {
            model.weights[j as usize] -= step * grad[j as usize];
            grad[j as usize] = 0.0;
        }
        model.bias[1] -= hyper.lr * bias_grad / n;
        model.bias[0] += hyper.lr * bias_grad / n;
        if scale < 1e-6 {
            model.weights.iter_mut().for_each(|w| *w *= scale);
            scale = 1.0;
        }
    }
    if scale != 1.0 {
        model.weights.iter_mut().for_each(|w| *w *= scale);
    }
}

fn objective(model: &JudgeModel, data: &[Encoded], l2: f64) -> f64 {
    let n = data.len() as f64;
    let loss: f64 = data
        .iter()
        .map(|ex| {
            let z = model.margin(&ex.x);
            if ex.y > 0.5 {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    loss / n + 0.5 * l2 * sq
}

/// Precomputed logits keyed by the space-joined sentence; lets an external
/// classifier act as the judge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LogitsTable {
    table: HashMap<String, Logits>,
}

impl LogitsTable {
    pub fn insert(&mut self, sentence: &Sentence, logits: Logits) {
        self.table.insert(sentence.joined(), logits);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Rows of `sentence<TAB>logit0<TAB>logit1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::format(i + 1, "expected 'sentence<TAB>logit0<TAB>logit1'"));
            }
            let parse = |s: &str| -> Result<f64> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::format(i + 1, format!("bad logit {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::format(i + 1, "logits must be finite"))
                }
            };
            table.insert(cols[0].to_string(), Logits::new(parse(cols[1])?, parse(cols[2])?));
        }
        Ok(LogitsTable { table })
    }

    pub fn emit(&self) -> String {
        let mut rows: Vec<(&String, &Logits)> = self.table.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        rows.into_iter()
            .map(|(s, l)| format!("{s}\t{}\t{}\n", l.logit0, l.logit1))
            .collect()
    }
}

impl AcceptabilityJudge for LogitsTable {
    fn logits(&self, s: &Sentence) -> Result<Logits> {
        let key = s.joined();
        self.table
            .get(&key)
            .copied()
            .ok_or(Error::MissingLogits(key))
    }
}
