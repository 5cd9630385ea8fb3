use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textcore::{Mode, Sentence};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub hash_dim: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hash_dim: 1 << 18,
            ngram_min: 1,
            ngram_max: 4,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hash_dim == 0 || self.hash_dim > u32::MAX as usize {
            return Err(Error::config("hash_dim must be in 1..=2^32-1"));
        }
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return Err(Error::config("need 1 <= ngram_min <= ngram_max"));
        }
        Ok(())
    }
}

/// Sorted, L2-normalized sparse feature vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseFeatures {
    pub entries: Vec<(u32, f64)>,
}

impl SparseFeatures {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }

    pub fn add_scaled_to(&self, dense: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            dense[i as usize] += scale * v;
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(n: usize, chars: &[char]) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    };
    feed(n as u8);
    let mut buf = [0u8; 4];
    for c in chars {
        for b in c.encode_utf8(&mut buf).bytes() {
            feed(b);
        }
    }
    h
}

/// Hashed character n-gram counts over the sentence wrapped in boundary
/// markers. Identical across runs and platforms.
pub fn featurize(s: &Sentence, cfg: &FeatureConfig) -> SparseFeatures {
    let sep = match s.mode() {
        Mode::Word => " ",
        Mode::Character => "",
    };
    let mut chars: Vec<char> = vec!['\u{2}'];
    chars.extend(s.tokens().join(sep).chars());
    chars.push('\u{3}');

    let mut idx: Vec<u32> = Vec::new();
    for n in cfg.ngram_min..=cfg.ngram_max {
        for w in chars.windows(n) {
            idx.push((fnv1a(n, w) % cfg.hash_dim as u64) as u32);
        }
    }
    idx.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for i in idx {
        match entries.last_mut() {
            Some((j, c)) if *j == i => *c += 1.0,
            _ => entries.push((i, 1.0)),
        }
    }
    let norm = entries.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        entries.iter_mut().for_each(|(_, c)| *c /= norm);
    }
    SparseFeatures { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_value() {
        // FNV-1a 64 of the bytes [0x01, b'a']
        let mut h = FNV_OFFSET;
        for b in [1u8, b'a'] {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        assert_eq!(fnv1a(1, &['a']), h);
        assert_ne!(fnv1a(1, &['a']), fnv1a(2, &['a']));
    }

    #[test]
    fn normalized_and_sorted() {
        let s = Sentence::parse_joined("she goes home .", Mode::Word).unwrap();
        let f = featurize(&s, &FeatureConfig::default());
        let norm: f64 = f.entries.iter().map(|(_, v)| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(f.entries.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn empty_sentence_has_boundary_features() {
        let f = featurize(&Sentence::empty(Mode::Word), &FeatureConfig::default());
        assert!(!f.entries.is_empty());
    }

    #[test]
    fn word_and_character_modes_differ_only_by_spacing() {
        let w = Sentence::parse_joined("ab", Mode::Word).unwrap();
        let c = Sentence::parse_joined("a b", Mode::Character).unwrap();
        let cfg = FeatureConfig::default();
        assert_eq!(featurize(&w, &cfg), featurize(&c, &cfg));
    }

    #[test]
    fn bad_configs() {
        assert!(FeatureConfig { hash_dim: 0, ..Default::default() }.validate().is_err());
        assert!(FeatureConfig { ngram_min: 3, ngram_max: 2, ..Default::default() }.validate().is_err());
    }
}
