use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use colagec::align::extract_edits;
use colagec::colacorpus::{build_cola_from_gec, corpus_stats, merge_corpora, Corpus};
use colagec::evalmetrics::{
    filter_eval, pct, per_type_breakdown, render_report, score, scored_items, MetricsReport,
};
use colagec::gectrain::{
    beam_decode, build_vocab, rerank_with_cola, train, Critic, DevSet, Hypothesis, Seq2SeqModel, TrainData,
    TrainStage,
};
use colagec::judge::{acc, mcc, train_judge, AcceptabilityJudge, ConfusionCounts, JudgeModel, LogitsTable};
use colagec::synth::make_benchmark;
use colagec::textcore::{
    emit_cola_tsv, emit_m2, parse_cola_tsv, parse_m2, AnnotatedPair, ColaInstance, ErrorType, Label, Mode, Origin,
    Sentence,
};
use colagec::{derive_seed, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_json, read_text, RunConfig};
use crate::experiment::{ablate, GecData};

#[derive(Debug, Parser)]
#[command(name = "colagec", version, about = "Acceptability-guided grammatical error correction")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every random choice (overrides COLAGEC_SEED and the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for decoding (overrides COLAGEC_THREADS and the config).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic benchmark: GEC splits, acceptability corpus, manifest.
    SynthGen(SynthGenArgs),
    /// Align parallel text files and write typed edits as M2.
    ExtractEdits(ExtractArgs),
    /// Build an acceptability corpus from M2 files and optional labelled TSV.
    BuildCola(BuildColaArgs),
    /// Train the acceptability judge.
    TrainJudge(TrainJudgeArgs),
    /// Score a judge (or a precomputed logits table) on a labelled TSV.
    JudgeEval(JudgeEvalArgs),
    /// Train the correction model.
    TrainGec(TrainGecArgs),
    /// Correct sentences with a trained model, optionally reranking with a judge.
    Decode(DecodeArgs),
    /// Edit-level precision, recall and F0.5 of hypotheses against gold M2.
    Evaluate(EvaluateArgs),
    /// Rescore with punctuation and other errors removed, separately and together.
    ErrorAnalysis(EvaluateArgs),
    /// Four-variant ablation over several seeds.
    Ablate(AblateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SynthGen(_) => "synth-gen",
            Command::ExtractEdits(_) => "extract-edits",
            Command::BuildCola(_) => "build-cola",
            Command::TrainJudge(_) => "train-judge",
            Command::JudgeEval(_) => "judge-eval",
            Command::TrainGec(_) => "train-gec",
            Command::Decode(_) => "decode",
            Command::Evaluate(_) => "evaluate",
            Command::ErrorAnalysis(_) => "error-analysis",
            Command::Ablate(_) => "ablate",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthGenArgs {
    /// Injection mix preset or spec file (overrides synth.mix).
    #[arg(long)]
    pub mix: Option<String>,
    /// Grammar preset or file (overrides grammar).
    #[arg(long)]
    pub grammar: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildColaArgs {
    /// GEC M2 file; repeatable.
    #[arg(long, required = true)]
    pub gec: Vec<PathBuf>,
    /// Labelled `label<TAB>sentence` file of non-GEC instances.
    #[arg(long)]
    pub extra: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainJudgeArgs {
    /// Directory holding cola_train.tsv, cola_dev.tsv and cola_test.tsv.
    #[arg(long)]
    pub cola_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct JudgeEvalArgs {
    #[arg(long, conflicts_with = "logits", required_unless_present = "logits")]
    pub judge: Option<PathBuf>,
    /// `sentence<TAB>logit0<TAB>logit1` table from an external judge.
    #[arg(long)]
    pub logits: Option<PathBuf>,
    #[arg(long)]
    pub cola: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossArg {
    Plain,
    Dynamic,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainGecArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Dev M2; enables per-epoch dev F0.5 in the log.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Judge for dynamic stages, registered under the name `cola`.
    #[arg(long)]
    pub judge: Option<PathBuf>,
    /// Loss of the fine-tuning stage of the default schedule.
    #[arg(long, value_enum, default_value = "plain")]
    pub loss: LossArg,
    /// Stage schedule JSON replacing the default pretrain/fine-tune pair.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// M2 file (sources are read) or plain text, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Rerank the n-best list with this judge.
    #[arg(long)]
    pub judge: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beam: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    /// One corrected sentence per line, aligned with the gold sentences.
    #[arg(long)]
    pub hyp: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    /// Directory holding train.m2, dev.m2 and test.m2.
    #[arg(long)]
    pub bench: PathBuf,
    #[arg(long)]
    pub judge: PathBuf,
}

/// Schedule file for `train-gec --schedule`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub datasets: BTreeMap<String, PathBuf>,
    pub stages: Vec<TrainStage>,
}

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, content).map_err(|e| Error::io(p, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        self.write(name, &s)
    }

    fn mode(&self) -> Result<Mode> {
        self.cfg.mode()
    }

    fn par_map<T: Sync, U: Send>(&self, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Result<Vec<U>> {
        if self.cfg.threads <= 1 {
            return Ok(items.iter().map(f).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.threads)
            .build()
            .map_err(|e| Error::config(format!("threads: {e}")))?;
        Ok(pool.install(|| items.par_iter().map(f).collect()))
    }
}

/// Resolves config, environment and flags (in increasing precedence).
pub fn resolve_config(global: &GlobalArgs, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(global.config.as_deref())?;
    cfg.apply_env(env)?;
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(t) = global.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn apply_command_overrides(cfg: &mut RunConfig, cmd: &Command) {
    match cmd {
        Command::SynthGen(a) => {
            if let Some(m) = &a.mix {
                cfg.synth.mix = m.clone();
            }
            if let Some(g) = &a.grammar {
                cfg.grammar = g.clone();
            }
        }
        Command::Decode(a) => {
            if let Some(l) = a.lambda {
                cfg.decode.lambda = l;
            }
            if let Some(b) = a.beam {
                cfg.decode.beam = b;
            }
        }
        _ => {}
    }
}

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    command: &'a Command,
    config: &'a RunConfig,
}

pub fn run(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<()> {
    let mut cfg = resolve_config(&cli.global, env)?;
    apply_command_overrides(&mut cfg, &cli.command);
    cfg.validate()?;
    let out = cli.global.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ctx = Context { cfg, out };
    ctx.write_json(
        "effective_config.json",
        &EffectiveConfig {
            command: &cli.command,
            config: &ctx.cfg,
        },
    )?;
    let started = std::time::Instant::now();
    let result = dispatch(&ctx, &cli.command);
    log_run(&ctx, cli.command.name(), started.elapsed(), &result);
    result
}

fn log_run(ctx: &Context, name: &str, elapsed: std::time::Duration, result: &Result<()>) {
    use std::io::Write;
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let status = match result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("error: {e}"),
    };
    if let Ok(mut f) = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(ctx.path("run.log"))
    {
        let _ = writeln!(f, "{now}\t{name}\t{:.3}s\t{status}", elapsed.as_secs_f64());
    }
}

fn dispatch(ctx: &Context, cmd: &Command) -> Result<()> {
    match cmd {
        Command::SynthGen(_) => synth_gen(ctx),
        Command::ExtractEdits(a) => extract(ctx, a),
        Command::BuildCola(a) => build_cola(ctx, a),
        Command::TrainJudge(a) => cmd_train_judge(ctx, a),
        Command::JudgeEval(a) => judge_eval(ctx, a),
        Command::TrainGec(a) => train_gec(ctx, a),
        Command::Decode(a) => decode(ctx, a),
        Command::Evaluate(a) => cmd_evaluate(ctx, a),
        Command::ErrorAnalysis(a) => error_analysis(ctx, a),
        Command::Ablate(a) => cmd_ablate(ctx, a),
    }
}

pub fn read_m2(path: &Path, mode: Mode) -> Result<Vec<AnnotatedPair>> {
    parse_m2(&read_text(path)?, mode).map_err(|e| e.in_file(path))
}

fn read_lines(path: &Path, mode: Mode) -> Result<Vec<Sentence>> {
    read_text(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| Sentence::parse_joined(l, mode).map_err(|e| Error::format(i + 1, e.to_string()).in_file(path)))
        .collect()
}

fn read_cola(path: &Path, mode: Mode, origin: Origin) -> Result<Vec<ColaInstance>> {
    parse_cola_tsv(&read_text(path)?, mode, origin).map_err(|e| e.in_file(path))
}

pub fn read_judge(path: &Path) -> Result<JudgeModel> {
    JudgeModel::from_json(&read_text(path)?).map_err(|e| e.in_file(path))
}

fn read_model(path: &Path) -> Result<Seq2SeqModel> {
    Seq2SeqModel::from_json(&read_text(path)?).map_err(|e| e.in_file(path))
}

fn sentences_text(s: &[Sentence]) -> String {
    s.iter().map(|s| s.joined() + "\n").collect()
}

fn write_cola(ctx: &Context, corpus: &Corpus) -> Result<()> {
    for (name, part) in corpus.splits() {
        ctx.write(&format!("cola_{name}.tsv"), &emit_cola_tsv(part))?;
    }
    Ok(())
}

fn breakdown_table(splits: &[(&str, &[AnnotatedPair])]) -> Result<String> {
    let mut labels = BTreeSet::new();
    let mut tables = Vec::new();
    for (name, pairs) in splits {
        let t = per_type_breakdown(pairs)?;
        labels.extend(t.keys().cloned());
        tables.push((name, t));
    }
    let mut out = format!("{:<8}", "Type");
    for (name, _) in &tables {
        let _ = write!(out, " {name:>8}");
    }
    out.push('\n');
    for l in &labels {
        let _ = write!(out, "{l:<8}");
        for (_, t) in &tables {
            let v = t.get(l).map_or(0.0, |s| s.pct);
            let _ = write!(out, " {v:>7.2}%");
        }
        out.push('\n');
    }
    Ok(out)
}

fn synth_gen(ctx: &Context) -> Result<()> {
    let g = ctx.cfg.grammar()?;
    let spec = ctx.cfg.injection()?;
    let b = make_benchmark(&g, &spec, &ctx.cfg.synth.sizes, ctx.cfg.seed)?;
    ctx.write("train.m2", &emit_m2(&b.train))?;
    ctx.write("dev.m2", &emit_m2(&b.dev))?;
    ctx.write("test.m2", &emit_m2(&b.test))?;
    write_cola(ctx, &b.cola)?;
    ctx.write_json("manifest.json", &b.manifest)?;
    let table = breakdown_table(&[("train", &b.train), ("dev", &b.dev), ("test", &b.test)])?;
    ctx.write("type_breakdown.txt", &table)
}

fn extract(ctx: &Context, a: &ExtractArgs) -> Result<()> {
    let mode = ctx.mode()?;
    let src = read_lines(&a.source, mode)?;
    let tgt = read_lines(&a.target, mode)?;
    if src.len() != tgt.len() {
        return Err(Error::File {
            path: a.target.clone(),
            message: format!("{} lines but {} has {}", tgt.len(), a.source.display(), src.len()),
        });
    }
    let extract = ctx.cfg.extract()?;
    let pairs = src
        .into_iter()
        .zip(&tgt)
        .map(|(s, t)| {
            let edits = extract_edits(&s, t, &extract);
            AnnotatedPair::single(s, edits)
        })
        .collect::<Result<Vec<_>>>()?;
    ctx.write("edits.m2", &emit_m2(&pairs))
}

fn build_cola(ctx: &Context, a: &BuildColaArgs) -> Result<()> {
    let mode = ctx.mode()?;
    let mut parts = Vec::new();
    for p in &a.gec {
        let pairs = read_m2(p, mode)?;
        let inst = build_cola_from_gec(&pairs, &ctx.cfg.cola.filter).map_err(|e| e.in_file(p))?;
        parts.push((p.display().to_string(), inst));
    }
    if let Some(p) = &a.extra {
        parts.push((p.display().to_string(), read_cola(p, mode, Origin::Linguistics)?));
    }
    let merged = merge_corpora(&parts, &ctx.cfg.cola.split, ctx.cfg.seed)?;
    write_cola(ctx, &merged.corpus)?;
    #[derive(Serialize)]
    struct Stats {
        duplicates: usize,
        label_conflicts: usize,
        counts: colagec::colacorpus::StatsReport,
    }
    ctx.write_json(
        "cola_stats.json",
        &Stats {
            duplicates: merged.duplicates,
            label_conflicts: merged.label_conflicts,
            counts: corpus_stats(&merged.corpus),
        },
    )
}

#[derive(Serialize)]
struct JudgeScores {
    counts: ConfusionCounts,
    acc: f64,
    mcc: f64,
}

impl JudgeScores {
    fn new(counts: ConfusionCounts) -> Result<Self> {
        Ok(JudgeScores {
            acc: acc(&counts)?,
            mcc: mcc(&counts)?,
            counts,
        })
    }

    fn line(&self, name: &str) -> String {
        format!("{name:<6} {:>7} {:>7}\n", pct(self.acc), format!("{:.4}", self.mcc))
    }
}

fn cmd_train_judge(ctx: &Context, a: &TrainJudgeArgs) -> Result<()> {
    let mode = ctx.mode()?;
    let load = |name: &str| read_cola(&a.cola_dir.join(format!("cola_{name}.tsv")), mode, Origin::Linguistics);
    let corpus = Corpus {
        train: load("train")?,
        dev: load("dev")?,
        test: load("test")?,
    };
    let hyper = colagec::judge::JudgeHyper {
        seed: ctx.cfg.seed,
        ..ctx.cfg.judge.clone()
    };
    let (model, log) = train_judge(&corpus, &hyper)?;
    ctx.write("judge.json", &model.to_json())?;
    ctx.write_json("judge_log.json", &log)?;
    let mut report = BTreeMap::new();
    let mut text = format!("{:<6} {:>7} {:>7}\n", "Split", "ACC", "MCC");
    for (name, part) in corpus.splits() {
        if part.is_empty() {
            continue;
        }
        let s = JudgeScores::new(model.evaluate(part))?;
        text.push_str(&s.line(name));
        report.insert(name, s);
    }
    ctx.write_json("judge_report.json", &report)?;
    ctx.write("judge_report.txt", &text)
}

fn judge_eval(ctx: &Context, a: &JudgeEvalArgs) -> Result<()> {
    let mode = ctx.mode()?;
    let inst = read_cola(&a.cola, mode, Origin::Linguistics)?;
    let judge: Box<dyn AcceptabilityJudge> = match (&a.judge, &a.logits) {
        (Some(p), _) => Box::new(read_judge(p)?),
        (None, Some(p)) => Box::new(LogitsTable::parse(&read_text(p)?).map_err(|e| e.in_file(p))?),
        (None, None) => return Err(Error::config("judge-eval needs --judge or --logits")),
    };
    let gold: Vec<bool> = inst.iter().map(|i| i.label == Label::Acceptable).collect();
    let predicted = inst
        .iter()
        .map(|i| Ok(judge.score(&i.sentence)?.value() < 0.5))
        .collect::<Result<Vec<bool>>>()
        .map_err(|e| e.in_file(&a.cola))?;
    let s = JudgeScores::new(ConfusionCounts::from_predictions(&gold, &predicted)).map_err(|e| e.in_file(&a.cola))?;
    let text = format!("{:<6} {:>7} {:>7}\n{}", "Split", "ACC", "MCC", s.line("eval"));
    ctx.write_json("judge_eval.json", &s)?;
    ctx.write("judge_eval.txt", &text)
}

fn train_gec(ctx: &Context, a: &TrainGecArgs) -> Result<()> {
    let mode = ctx.mode()?;
    let recipe = &ctx.cfg.gec;
    let extract = ctx.cfg.extract()?;
    let mut owned: BTreeMap<String, Vec<AnnotatedPair>> = BTreeMap::new();
    owned.insert("train".into(), read_m2(&a.train, mode)?);
    let stages = match &a.schedule {
        Some(p) => {
            let s: Schedule = parse_json(p)?;
            let base = p.parent().unwrap_or(Path::new("."));
            for (name, path) in &s.datasets {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                owned.insert(name.clone(), read_m2(&path, mode)?);
            }
            s.stages
        }
        None => vec![recipe.pretrain_stage(), recipe.finetune_stage(a.loss == LossArg::Dynamic)],
    };
    let dev = a.dev.as_ref().map(|p| read_m2(p, mode)).transpose()?;
    let judge = a.judge.as_ref().map(|p| read_judge(p)).transpose()?;
    let mut data = TrainData {
        datasets: owned.iter().map(|(k, v)| (k.clone(), v.as_slice())).collect(),
        ..Default::default()
    };
    if let Some(j) = &judge {
        data.judges.insert(
            "cola".into(),
            Critic {
                judge: j,
                acc: j.dev_accuracy(),
            },
        );
    }
    if let Some(d) = &dev {
        data.dev = Some(DevSet {
            pairs: d,
            extract: &extract,
        });
    }
    let vocab_pairs: Vec<AnnotatedPair> = owned.values().flatten().cloned().collect();
    let mcfg = colagec::gectrain::ModelConfig {
        seed: derive_seed(ctx.cfg.seed, 0),
        ..recipe.model.clone()
    };
    let tcfg = colagec::gectrain::TrainConfig {
        seed: derive_seed(ctx.cfg.seed, 1),
        ..recipe.train.clone()
    };
    let mut model = Seq2SeqModel::new(build_vocab(&vocab_pairs, recipe.vocab_min_count)?, mcfg)?;
    let log = train(&mut model, &stages, &data, &tcfg)?;
    ctx.write("gec_model.json", &model.to_json())?;
    ctx.write("train_log.jsonl", &log.to_json_lines())
}

fn read_sources(path: &Path, mode: Mode) -> Result<Vec<Sentence>> {
    if path.extension().is_some_and(|e| e == "m2") {
        Ok(read_m2(path, mode)?.into_iter().map(|p| p.source).collect())
    } else {
        read_lines(path, mode)
    }
}

#[derive(Serialize)]
struct DecodeReport {
    sentences: usize,
    truncated: usize,
    beam: usize,
    reranked: bool,
    lambda: Option<f64>,
}

fn decode(ctx: &Context, a: &DecodeArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let sources = read_sources(&a.input, model.vocab().mode())?;
    let judge = a.judge.as_ref().map(|p| read_judge(p)).transpose()?;
    let beam = ctx.cfg.decode.beam;
    let max_len = |s: &Sentence| ctx.cfg.gec.train.max_len(s.len());
    let nbest: Vec<Vec<Hypothesis>> = ctx
        .par_map(&sources, |s| beam_decode(&model, s, beam, max_len(s)))?
        .into_iter()
        .collect::<Result<_>>()?;
    let lambda = ctx.cfg.decode.lambda;
    let chosen: Vec<Hypothesis> = match &judge {
        Some(j) => ctx
            .par_map(&nbest, |n| rerank_with_cola(n, j, lambda))?
            .into_iter()
            .collect::<Result<_>>()?,
        None => nbest.iter().map(|n| n[0].clone()).collect(),
    };
    let hyps: Vec<Sentence> = chosen.iter().map(|h| h.sentence.clone()).collect();
    ctx.write("hyps.txt", &sentences_text(&hyps))?;
    ctx.write_json(
        "decode_report.json",
        &DecodeReport {
            sentences: hyps.len(),
            truncated: chosen.iter().filter(|h| h.truncated).count(),
            beam,
            reranked: judge.is_some(),
            lambda: judge.as_ref().map(|_| lambda),
        },
    )
}

fn scored(ctx: &Context, a: &EvaluateArgs) -> Result<Vec<colagec::evalmetrics::ScoredItem>> {
    let mode = ctx.mode()?;
    let gold = read_m2(&a.gold, mode)?;
    let hyps = read_lines(&a.hyp, mode)?;
    scored_items(&gold, &hyps, &ctx.cfg.extract()?).map_err(|e| e.in_file(&a.hyp))
}

fn cmd_evaluate(ctx: &Context, a: &EvaluateArgs) -> Result<()> {
    let items = scored(ctx, a)?;
    let report = score(&items, &ctx.cfg.eval.match_config());
    ctx.write_json("eval.json", &report)?;
    ctx.write("eval.txt", &render_report(&report))
}

#[derive(Serialize)]
struct AnalysisRow {
    setting: String,
    excluded: Vec<String>,
    report: Option<MetricsReport>,
}

pub const ANALYSIS_SETTINGS: [(&str, &[&str]); 4] = [
    ("all", &[]),
    ("-PUNCT", &["PUNCT"]),
    ("-OTHER", &["OTHER"]),
    ("-PUNCT-OTHER", &["PUNCT", "OTHER"]),
];

fn error_analysis(ctx: &Context, a: &EvaluateArgs) -> Result<()> {
    let items = scored(ctx, a)?;
    let cfg = ctx.cfg.eval.match_config();
    let mut rows = Vec::new();
    let mut text = format!("{:<14} {:>7} {:>7} {:>7}\n", "Setting", "P", "R", "F0.5");
    for (name, excl) in ANALYSIS_SETTINGS {
        let exclude: BTreeSet<ErrorType> = excl.iter().map(|l| l.parse().expect("fixed label")).collect();
        let report = match filter_eval(&items, &exclude, ctx.cfg.error_analysis.mode, &cfg) {
            Ok(r) => Some(r),
            Err(Error::EmptyEvaluation(_)) => None,
            Err(e) => return Err(e),
        };
        match &report {
            Some(r) => {
                let _ = writeln!(
                    text,
                    "{name:<14} {:>7} {:>7} {:>7}",
                    pct(r.precision),
                    pct(r.recall),
                    pct(r.f05)
                );
            }
            None => {
                let _ = writeln!(text, "{name:<14} {:>7} {:>7} {:>7}", "-", "-", "-");
            }
        }
        rows.push(AnalysisRow {
            setting: name.into(),
            excluded: excl.iter().map(|s| s.to_string()).collect(),
            report,
        });
    }
    ctx.write_json("error_analysis.json", &rows)?;
    ctx.write("error_analysis.txt", &text)
}

fn cmd_ablate(ctx: &Context, a: &AblateArgs) -> Result<()> {
    let mode = ctx.mode()?;
    let load = |n: &str| read_m2(&a.bench.join(format!("{n}.m2")), mode);
    let (train_p, dev_p, test_p) = (load("train")?, load("dev")?, load("test")?);
    let judge = read_judge(&a.judge)?;
    let extract = ctx.cfg.extract()?;
    let data = GecData {
        train: &train_p,
        dev: &dev_p,
        test: &test_p,
        extract: &extract,
    };
    let seeds: Vec<u64> = (0..ctx.cfg.ablate.num_seeds as u64)
        .map(|i| derive_seed(ctx.cfg.seed, 100 + i))
        .collect();
    let critic = Critic {
        judge: &judge,
        acc: judge.dev_accuracy(),
    };
    let outcome = ablate(&ctx.cfg.gec, &data, critic, &seeds)?;
    ctx.write_json("ablation.json", &outcome)?;
    let mut text = outcome.report.render("synthetic");
    let _ = writeln!(text, "\nmean F0.5 delta (+both - plain_ce): {:+.2}", outcome.both_minus_plain());
    ctx.write("ablation.txt", &text)
}
