//! File formats, checkpoints, run configuration and command implementations for
//! soft-label prediction heads. The numerics live in `softlabel_core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset_io;
mod error;
pub mod plot;

pub use error::{CheckpointError, Error, Result};
