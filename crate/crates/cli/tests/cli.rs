mod common;

use std::path::Path;

use colagec_cli::experiment::VARIANTS;
use common::{colagec, ok, read};

const TINY: &str = r#"{
  "seed": 3,
  "synth": {"sizes": {"train": 120, "dev": 30, "test": 30, "cola_synthetic": 40}},
  "judge": {"epochs": 10},
  "gec": {"pretrain_epochs": 1, "finetune_epochs": 1, "lambda_grid": [0.0, 0.5]},
  "ablate": {"num_seeds": 2}
}
"#;

fn tiny(d: &Path) {
    std::fs::write(d.join("run.json"), TINY).unwrap();
}

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn evaluate_identity_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny(d);
    ok(d, &["--config", "run.json", "synth-gen", "--out", "bench"]);
    let targets: String = colagec_cli::commands::read_m2(&d.join("bench/test.m2"), colagec::textcore::Mode::Word)
        .unwrap()
        .iter()
        .map(|p| p.resolved_target().unwrap().joined() + "\n")
        .collect();
    std::fs::write(d.join("gold.txt"), targets).unwrap();
    ok(d, &["evaluate", "--gold", "bench/test.m2", "--hyp", "gold.txt", "--out", "eval"]);
    let r = json(d.join("eval/eval.json"));
    for k in ["precision", "recall", "f05"] {
        assert_eq!(r[k], 1.0, "{k}");
    }
    let text = read(d.join("eval/eval.txt"));
    assert!(text.lines().any(|l| l.matches("100.00").count() == 3), "{text}");
}

#[test]
fn every_run_snapshots_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny(d);
    ok(d, &["--config", "run.json", "--seed", "9", "synth-gen", "--mix", "mix-b", "--out", "b"]);
    let snap = json(d.join("b/effective_config.json"));
    assert_eq!(snap["config"]["seed"], 9);
    assert_eq!(snap["config"]["synth"]["mix"], "mix-b");
    assert_eq!(snap["config"]["synth"]["sizes"]["train"], 120);
    let log = read(d.join("b/run.log"));
    assert!(log.lines().last().unwrap().contains("synth-gen"));
}

#[test]
fn environment_sits_between_config_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny(d);
    let run = |extra: &[&str], out: &str| {
        let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_colagec"));
        cmd.current_dir(d).env("COLAGEC_SEED", "5").args(["--config", "run.json"]).args(extra);
        cmd.args(["synth-gen", "--out", out]);
        assert!(cmd.status().unwrap().success());
        json(d.join(out).join("effective_config.json"))["config"]["seed"].clone()
    };
    assert_eq!(run(&[], "env"), 5);
    assert_eq!(run(&["--seed", "6"], "flag"), 6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = colagec(d, &["evaluate", "--gold", "missing.m2", "--hyp", "missing.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.m2"));

    std::fs::write(d.join("bad.json"), r#"{"seed": 1, "sede": 2}"#).unwrap();
    let out = colagec(d, &["--config", "bad.json", "synth-gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sede"), "{}", stderr(&out));

    let out = colagec(d, &["synth-gen", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(d.join("g.m2"), "S a b\nA 1 7|||DET|||c|||REQUIRED|||-NONE-|||0\n").unwrap();
    std::fs::write(d.join("h.txt"), "a b\n").unwrap();
    let out = colagec(d, &["evaluate", "--gold", "g.m2", "--hyp", "h.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("g.m2") && msg.contains('2'), "{msg}");

    let out = colagec(d, &["decode", "--model", "nope.json", "--input", "h.txt", "--beam", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("beam"));

    assert_eq!(colagec(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn extract_edits_writes_m2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("src.txt"), "they is ready\nok .\n").unwrap();
    std::fs::write(d.join("tgt.txt"), "they are ready .\nok .\n").unwrap();
    ok(d, &["extract-edits", "--source", "src.txt", "--target", "tgt.txt"]);
    let m2 = read(d.join("edits.m2"));
    assert!(m2.starts_with("S they is ready\nA 1 2|||SVA|||are|||"), "{m2}");
    assert!(m2.contains("A 3 3|||PUNCT|||.|||"));
    assert!(m2.contains("S ok .\nA -1 -1|||noop|||-NONE-|||"));

    std::fs::write(d.join("tgt.txt"), "only one line\n").unwrap();
    let out = colagec(d, &["extract-edits", "--source", "src.txt", "--target", "tgt.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("tgt.txt"));
}

#[test]
fn stage_outputs_and_ablation_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny(d);
    let c = |args: &[&str]| ok(d, &[&["--config", "run.json"][..], args].concat());
    c(&["synth-gen", "--out", "bench"]);
    for f in ["train.m2", "dev.m2", "test.m2", "cola_train.tsv", "manifest.json", "type_breakdown.txt"] {
        assert!(d.join("bench").join(f).is_file(), "{f}");
    }
    c(&["build-cola", "--gec", "bench/train.m2", "--gec", "bench/dev.m2", "--out", "cola"]);
    assert!(json(d.join("cola/cola_stats.json"))["counts"].is_object());
    c(&["train-judge", "--cola-dir", "cola", "--out", "judge"]);
    c(&["judge-eval", "--judge", "judge/judge.json", "--cola", "bench/cola_test.tsv", "--out", "judge"]);
    let acc = json(d.join("judge/judge_eval.json"))["acc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    c(&["train-gec", "--train", "bench/train.m2", "--judge", "judge/judge.json", "--loss", "dynamic", "--out", "gec"]);
    let log = read(d.join("gec/train_log.jsonl"));
    assert_eq!(log.lines().count(), 2);
    assert!(log.lines().last().unwrap().contains("finetune"));
    c(&["decode", "--model", "gec/gec_model.json", "--input", "bench/test.m2", "--out", "dec"]);
    assert_eq!(read(d.join("dec/hyps.txt")).lines().count(), 30);
    c(&["error-analysis", "--gold", "bench/test.m2", "--hyp", "dec/hyps.txt", "--out", "dec"]);
    let rows = json(d.join("dec/error_analysis.json"));
    let names: Vec<&str> = rows.as_array().unwrap().iter().map(|r| r["setting"].as_str().unwrap()).collect();
    assert_eq!(names, ["all", "-PUNCT", "-OTHER", "-PUNCT-OTHER"]);

    c(&["ablate", "--bench", "bench", "--judge", "judge/judge.json", "--out", "abl"]);
    let abl = json(d.join("abl/ablation.json"));
    let rows = abl["report"]["rows"].as_array().unwrap();
    let variants: Vec<&str> = rows.iter().map(|r| r["variant"].as_str().unwrap()).collect();
    assert_eq!(variants, VARIANTS);
    assert_eq!(abl["report"]["seeds"].as_array().unwrap().len(), 2);
    let text = read(d.join("abl/ablation.txt"));
    let lines: Vec<&str> = text.lines().collect();
    assert!(VARIANTS.iter().all(|v| lines[0].contains(v)));
    assert!(lines[1].contains("Pre") && lines[2].contains("Rec") && lines[3].contains("F0.5"));
    assert!(text.contains("mean F0.5 delta"));
}

#[test]
fn schedule_file_drives_training() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny(d);
    ok(d, &["--config", "run.json", "synth-gen", "--out", "bench"]);
    std::fs::write(
        d.join("bench/schedule.json"),
        r#"{"datasets": {"dev": "dev.m2"}, "stages": [
            {"name": "warm", "dataset": "dev", "epochs": 1, "lr": 0.005},
            {"name": "main", "dataset": "train", "epochs": 1, "lr": 0.002}
        ]}"#,
    )
    .unwrap();
    ok(d, &["--config", "run.json", "train-gec", "--train", "bench/train.m2", "--schedule", "bench/schedule.json"]);
    let log = read(d.join("train_log.jsonl"));
    let stages: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stages, ["warm", "main"]);

    std::fs::write(
        d.join("bench/dyn.json"),
        r#"{"datasets": {}, "stages": [{"name": "x", "dataset": "train", "epochs": 1, "lr": 0.01, "loss": "dynamic", "judge": "cola"}]}"#,
    )
    .unwrap();
    let out = colagec(d, &["train-gec", "--train", "bench/train.m2", "--schedule", "bench/dyn.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cola"));
}
