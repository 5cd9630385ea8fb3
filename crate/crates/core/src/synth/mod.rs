//! Synthetic ground truth: a small agreement grammar, typed reversible error
//! injection, and benchmark assembly with a manifest of seeds and counts.

mod benchmark;
mod grammar;
mod inject;

pub use benchmark::{make_benchmark, Benchmark, BenchmarkSizes, Manifest, SplitSummary};
pub use grammar::{gen_corpus, Number, Piece, Pronoun, Role, SynthGrammar, Template, Verb};
pub use inject::{inject, ErrorInjectionSpec, ErrorKind, Injection};
