use std::collections::BTreeMap;

use colagec::align::ExtractConfig;
use colagec::derive_seed;
use colagec::evalmetrics::{ablation_run, evaluate, AblationReport, EditMatchConfig, MetricsReport};
use colagec::gectrain::{
    beam_decode, build_vocab, rerank_with_cola, train, Critic, Hypothesis, ModelConfig, Seq2SeqModel, TrainConfig,
    TrainData, TrainLog, TrainStage,
};
use colagec::judge::AcceptabilityJudge;
use colagec::textcore::{AnnotatedPair, Sentence};
use colagec::{Error, Result};
use serde::{Deserialize, Serialize};

pub const VARIANTS: [&str; 4] = ["plain_ce", "+dynamic", "+reranker", "+both"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GecRecipe {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab_min_count: usize,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    pub beam: usize,
    /// Candidate reranker weights; the best on dev is used on test.
    pub lambda_grid: Vec<f64>,
}

impl Default for GecRecipe {
    fn default() -> Self {
        GecRecipe {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            vocab_min_count: 2,
            pretrain_epochs: 10,
            pretrain_lr: 0.005,
            finetune_epochs: 3,
            finetune_lr: 0.001,
            beam: 4,
            lambda_grid: vec![0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0],
        }
    }
}

impl GecRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.beam == 0 {
            return Err(Error::config("beam must be at least 1"));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::config("lambda_grid must be a non-empty list of finite values >= 0"));
        }
        Ok(())
    }

    pub fn pretrain_stage(&self) -> TrainStage {
        TrainStage::plain("pretrain", "train", self.pretrain_epochs, self.pretrain_lr)
    }

    pub fn finetune_stage(&self, dynamic: bool) -> TrainStage {
        if dynamic {
            TrainStage::dynamic("finetune", "train", self.finetune_epochs, self.finetune_lr, "cola")
        } else {
            TrainStage::plain("finetune", "train", self.finetune_epochs, self.finetune_lr)
        }
    }

    fn with_seed(&self, seed: u64) -> (ModelConfig, TrainConfig) {
        let model = ModelConfig {
            seed: derive_seed(seed, 0),
            ..self.model.clone()
        };
        let train = TrainConfig {
            seed: derive_seed(seed, 1),
            ..self.train.clone()
        };
        (model, train)
    }
}

pub struct GecData<'a> {
    pub train: &'a [AnnotatedPair],
    pub dev: &'a [AnnotatedPair],
    pub test: &'a [AnnotatedPair],
    pub extract: &'a ExtractConfig,
}

/// Plain-CE baseline and its dynamic-loss sibling, sharing one pretrained
/// starting point.
pub struct TrainedPair {
    pub plain: Seq2SeqModel,
    pub dynamic: Seq2SeqModel,
    pub plain_log: TrainLog,
    pub dynamic_log: TrainLog,
}

pub fn train_plain(recipe: &GecRecipe, data: &GecData<'_>, seed: u64) -> Result<(Seq2SeqModel, TrainLog)> {
    recipe.validate()?;
    let (mcfg, tcfg) = recipe.with_seed(seed);
    let mut model = Seq2SeqModel::new(build_vocab(data.train, recipe.vocab_min_count)?, mcfg)?;
    let td = TrainData {
        datasets: BTreeMap::from([("train".to_string(), data.train)]),
        ..Default::default()
    };
    let log = train(&mut model, &[recipe.pretrain_stage(), recipe.finetune_stage(false)], &td, &tcfg)?;
    Ok((model, log))
}

pub fn train_pair(recipe: &GecRecipe, data: &GecData<'_>, critic: Critic<'_>, seed: u64) -> Result<TrainedPair> {
    recipe.validate()?;
    let (mcfg, tcfg) = recipe.with_seed(seed);
    let mut base = Seq2SeqModel::new(build_vocab(data.train, recipe.vocab_min_count)?, mcfg)?;
    let td = TrainData {
        datasets: BTreeMap::from([("train".to_string(), data.train)]),
        judges: BTreeMap::from([("cola".to_string(), critic)]),
        dev: None,
    };
    let pre_log = train(&mut base, &[recipe.pretrain_stage()], &td, &tcfg)?;
    let mut out = Vec::new();
    for dynamic in [false, true] {
        let mut m = base.clone();
        let mut log = pre_log.clone();
        log.records
            .extend(train(&mut m, &[recipe.finetune_stage(dynamic)], &td, &tcfg)?.records);
        out.push((m, log));
    }
    let (dynamic, dynamic_log) = out.pop().expect("two runs");
    let (plain, plain_log) = out.pop().expect("two runs");
    Ok(TrainedPair {
        plain,
        dynamic,
        plain_log,
        dynamic_log,
    })
}

pub fn nbest_lists(model: &Seq2SeqModel, pairs: &[AnnotatedPair], recipe: &GecRecipe) -> Result<Vec<Vec<Hypothesis>>> {
    pairs
        .iter()
        .map(|p| beam_decode(model, &p.source, recipe.beam, recipe.train.max_len(p.source.len())))
        .collect()
}

fn top1(nbest: &[Vec<Hypothesis>], sources: &[AnnotatedPair]) -> Vec<Sentence> {
    nbest
        .iter()
        .zip(sources)
        .map(|(n, p)| n.first().map_or_else(|| p.source.clone(), |h| h.sentence.clone()))
        .collect()
}

pub fn rerank_all(nbest: &[Vec<Hypothesis>], judge: &dyn AcceptabilityJudge, lambda: f64) -> Result<Vec<Sentence>> {
    nbest
        .iter()
        .map(|n| Ok(rerank_with_cola(n, judge, lambda)?.sentence))
        .collect()
}

/// Reranker weight with the best dev F0.5; ties go to the smaller weight.
pub fn tune_lambda(
    nbest_dev: &[Vec<Hypothesis>],
    dev: &[AnnotatedPair],
    judge: &dyn AcceptabilityJudge,
    grid: &[f64],
    extract: &ExtractConfig,
) -> Result<(f64, f64)> {
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &lambda in &grid {
        let hyps = rerank_all(nbest_dev, judge, lambda)?;
        let f = evaluate(dev, &hyps, extract, &EditMatchConfig::default())?.f05;
        if f > best.1 {
            best = (lambda, f);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub lambda_plain: f64,
    pub lambda_dynamic: f64,
    pub variants: BTreeMap<String, MetricsReport>,
    pub plain_log: TrainLog,
    pub dynamic_log: TrainLog,
}

/// Trains both models for `seed` and scores all four variants on test.
pub fn run_seed(recipe: &GecRecipe, data: &GecData<'_>, critic: Critic<'_>, seed: u64) -> Result<SeedRun> {
    let trained = train_pair(recipe, data, critic, seed)?;
    let cfg = EditMatchConfig::default();
    let mut variants = BTreeMap::new();
    let mut lambdas = Vec::new();
    for (model, base, reranked) in [
        (&trained.plain, VARIANTS[0], VARIANTS[2]),
        (&trained.dynamic, VARIANTS[1], VARIANTS[3]),
    ] {
        let dev_nbest = nbest_lists(model, data.dev, recipe)?;
        let test_nbest = nbest_lists(model, data.test, recipe)?;
        let (lambda, _) = tune_lambda(&dev_nbest, data.dev, critic.judge, &recipe.lambda_grid, data.extract)?;
        lambdas.push(lambda);
        let plain_hyps = top1(&test_nbest, data.test);
        variants.insert(base.to_string(), evaluate(data.test, &plain_hyps, data.extract, &cfg)?);
        let rr = rerank_all(&test_nbest, critic.judge, lambda)?;
        variants.insert(reranked.to_string(), evaluate(data.test, &rr, data.extract, &cfg)?);
    }
    Ok(SeedRun {
        seed,
        lambda_plain: lambdas[0],
        lambda_dynamic: lambdas[1],
        variants,
        plain_log: trained.plain_log,
        dynamic_log: trained.dynamic_log,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationOutcome {
    pub report: AblationReport,
    pub runs: Vec<SeedRun>,
}

impl AblationOutcome {
    /// Mean test F0.5 of `+both` minus that of `plain_ce`, in points.
    pub fn both_minus_plain(&self) -> f64 {
        let f = |v: &str| self.report.row(v).map_or(0.0, |r| r.f05);
        100.0 * (f(VARIANTS[3]) - f(VARIANTS[0]))
    }
}

pub fn ablate(recipe: &GecRecipe, data: &GecData<'_>, critic: Critic<'_>, seeds: &[u64]) -> Result<AblationOutcome> {
    let mut runs = Vec::new();
    for &seed in seeds {
        runs.push(run_seed(recipe, data, critic, seed)?);
    }
    let names: Vec<String> = VARIANTS.iter().map(|s| s.to_string()).collect();
    let report = ablation_run(&names, seeds, |variant, seed| {
        let run = runs.iter().find(|r| r.seed == seed).expect("seed was run");
        Ok(run.variants[variant].clone())
    })?;
    Ok(AblationOutcome { report, runs })
}
