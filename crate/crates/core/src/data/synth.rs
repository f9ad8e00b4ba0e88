//! Synthetic disagreement data with a planted, linearly decodable signal.
//!
//! Each instance gets a latent agreement level `k` in `0..=a`. Its text mixes words
//! from a "positive" and a "negative" pool in proportion `k / a` (plus a few neutral
//! filler words) and exactly `k` of its `a` annotators vote positive. With `noise > 0`
//! each vote is flipped independently, so soft labels stay on the `k / a` grid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DisagreementDataset, Instance, Split};
use crate::error::{Error, Result};
use crate::seed::{rng_for, salt};

const POS_ONSETS: [&str; 6] = ["bra", "dre", "gru", "kro", "pla", "tri"];
const NEG_ONSETS: [&str; 6] = ["sho", "vel", "mir", "zan", "lum", "fen"];
const NEUTRAL_ONSETS: [&str; 6] = ["the", "and", "ova", "ist", "ume", "oke"];
const CODAS: [&str; 5] = ["t", "mon", "lix", "das", "ro"];
const NEUTRAL_WORDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Annotators per instance.
    pub a: u32,
    pub seed: u64,
    /// Per-vote flip probability.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_train: 400,
            n_val: 100,
            n_test: 100,
            a: 3,
            seed: 7,
            noise: 0.0,
        }
    }
}

fn pool(onsets: &[&str]) -> Vec<String> {
    onsets
        .iter()
        .flat_map(|o| CODAS.iter().map(move |c| format!("{o}{c}")))
        .collect()
}

struct Vocab {
    positive: Vec<String>,
    negative: Vec<String>,
    neutral: Vec<String>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &'a [String]) -> &'a str {
    &words[rng.gen_range(0..words.len())]
}

fn make_split(spec: &SynthSpec, vocab: &Vocab, split: Split, n: usize) -> Result<Vec<Instance>> {
    let mut rng = rng_for(&[spec.seed, salt::SYNTH, split as u64]);
    let a = spec.a as usize;
    // levels k with k/a <= 0.5 are the negative class
    let max_negative = a / 2;
    let signal_len = 12.max(2 * a);

    let mut classes: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    classes.shuffle(&mut rng);

    let mut out = Vec::with_capacity(n);
    for (i, &class) in classes.iter().enumerate() {
        let k = if class == 0 {
            rng.gen_range(0..=max_negative)
        } else {
            rng.gen_range(max_negative + 1..=a)
        };
        let n_pos = (signal_len as f64 * k as f64 / a as f64 + 0.5) as usize;
        let mut words: Vec<&str> = Vec::with_capacity(signal_len + NEUTRAL_WORDS);
        for j in 0..signal_len {
            let source = if j < n_pos { &vocab.positive } else { &vocab.negative };
            words.push(pick(&mut rng, source));
        }
        for _ in 0..NEUTRAL_WORDS {
            words.push(pick(&mut rng, &vocab.neutral));
        }
        words.shuffle(&mut rng);

        let mut votes: Vec<u8> = (0..a).map(|j| u8::from(j < k)).collect();
        votes.shuffle(&mut rng);
        if spec.noise > 0.0 {
            for v in &mut votes {
                if rng.gen::<f64>() < spec.noise {
                    *v = 1 - *v;
                }
            }
        }
        let id = format!("synth-{}-{i:05}", split.name());
        out.push(Instance::new(id, words.join(" "), votes, None, None)?);
    }
    Ok(out)
}

/// Generates a dataset whose soft labels all lie on `{0, 1/a, ..., 1}`. Classes are
/// balanced by construction (exactly, up to one instance, when `noise = 0`).
pub fn synthesize_dataset(spec: &SynthSpec) -> Result<DisagreementDataset> {
    if spec.a < 1 {
        return Err(Error::invalid("synthetic dataset needs a >= 1"));
    }
    if spec.n_train == 0 || spec.n_val == 0 || spec.n_test == 0 {
        return Err(Error::invalid("synthetic split sizes must be >= 1"));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(Error::invalid("noise must lie in [0, 1]"));
    }
    let vocab = Vocab {
        positive: pool(&POS_ONSETS),
        negative: pool(&NEG_ONSETS),
        neutral: pool(&NEUTRAL_ONSETS),
    };
    DisagreementDataset::new(
        make_split(spec, &vocab, Split::Train, spec.n_train)?,
        make_split(spec, &vocab, Split::Validation, spec.n_val)?,
        make_split(spec, &vocab, Split::Test, spec.n_test)?,
    )
}
