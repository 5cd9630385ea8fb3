#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn colagec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colagec"))
        .current_dir(dir)
        .args(args)
        .env_remove("COLAGEC_SEED")
        .env_remove("COLAGEC_THREADS")
        .env_remove("COLAGEC_GRAMMAR")
        .output()
        .expect("binary runs")
}

pub fn ok(dir: &Path, args: &[&str]) {
    let out = colagec(dir, args);
    assert!(
        out.status.success(),
        "colagec {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn read(path: impl AsRef<Path>) -> String {
    let p = path.as_ref();
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}
