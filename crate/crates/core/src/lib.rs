//! Numerics for soft-label ("learning with disagreement") prediction.
//!
//! * [`activations`]: the sinusoidal step function (SSF), the widened sigmoid, the
//!   post-training step quantizer and ReLU, with analytic derivatives.
//! * [`network`]: a small dense head (dropout, ReLU hidden layer, dropout, one output
//!   unit) with manual backpropagation.
//! * [`data`]: instances with annotator votes, soft/hard labels, a hashed n-gram
//!   featurizer and a synthetic dataset generator.
//! * [`training`]: soft-label cross-entropy and the best-validation training loop.
//! * [`evaluation`]: the three inference approaches, soft loss and micro-F1.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, checkpoints and the
//! command line live in the `softlabel` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod activations;
pub mod data;
mod error;
pub mod evaluation;
pub mod network;
mod seed;
pub mod sparse;
pub mod training;

pub use error::{Error, Result};
