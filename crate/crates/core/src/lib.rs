//! Acceptability-guided grammatical error correction.
//!
//! The crate covers the full loop: turning error-correction pairs into
//! acceptability corpora, training a character n-gram acceptability judge,
//! training a small attention seq2seq corrector whose loss is weighted by the
//! judge, reranking n-best corrections with the judge, and scoring everything
//! at the edit level.

pub mod align;
pub mod colacorpus;
pub mod error;
pub mod evalmetrics;
pub mod gectrain;
pub mod judge;
pub mod synth;
pub mod textcore;

pub use error::{Error, Result};

/// Independent seed for sub-stream `index` of `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
