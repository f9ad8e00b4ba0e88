//! Hashed bag-of-n-grams featurizer: text in, L2-normalized sparse vector out.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::seed::splitmix64;
use crate::sparse::SparseVector;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FeaturizerConfig {
    /// Number of hash buckets; a power of two.
    pub dimension: usize,
    /// N-gram orders to hash, a non-empty subset of `{1, 2}`.
    pub ngram_orders: Vec<u8>,
    pub lowercase: bool,
    pub hash_seed: u64,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            dimension: 16384,
            ngram_orders: vec![1, 2],
            lowercase: true,
            hash_seed: 0,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 || !self.dimension.is_power_of_two() {
            return Err(Error::invalid("featurizer dimension must be a power of two >= 2"));
        }
        if self.dimension > u32::MAX as usize {
            return Err(Error::invalid("featurizer dimension too large"));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.iter().any(|o| !matches!(o, 1 | 2)) {
            return Err(Error::invalid("ngram_orders must be a non-empty subset of {1, 2}"));
        }
        Ok(())
    }

    fn uses(&self, order: u8) -> bool {
        self.ngram_orders.contains(&order)
    }

    fn bucket(&self, order: u8, parts: &[&str]) -> u32 {
        let mut h = FNV_OFFSET ^ splitmix64(self.hash_seed);
        let mut feed = |b: u8| {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        };
        feed(order);
        for (k, part) in parts.iter().enumerate() {
            if k > 0 {
                feed(0x1f);
            }
            part.bytes().for_each(&mut feed);
        }
        (splitmix64(h) & (self.dimension as u64 - 1)) as u32
    }
}

/// Splits on Unicode whitespace and trims non-alphanumeric characters from both
/// ends of each token. Tokens that trim to nothing are dropped.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| if lowercase { t.to_lowercase() } else { String::from(t) })
        .collect()
}

pub fn featurize(config: &FeaturizerConfig, text: &str) -> Result<SparseVector> {
    config.validate()?;
    let tokens = tokenize(text, config.lowercase);
    let mut pairs = Vec::new();
    if config.uses(1) {
        pairs.extend(tokens.iter().map(|t| (config.bucket(1, &[t]), 1.0)));
    }
    if config.uses(2) {
        pairs.extend(tokens.windows(2).map(|w| (config.bucket(2, &[&w[0], &w[1]]), 1.0)));
    }
    let mut v = SparseVector::from_pairs(config.dimension, pairs)?;
    let norm = v.norm();
    if norm > 0.0 {
        v.scale(1.0 / norm);
    }
    Ok(v)
}
