//! Self-describing JSON checkpoints of a [`HeadNetwork`].
//!
//! Weights are written as decimal literals in shortest round-trip form, so loading a
//! checkpoint reproduces the saved parameters bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use softlabel_core::network::{HeadConfig, HeadNetwork};

use crate::error::{CheckpointError, Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epoch: usize,
    pub validation_loss: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// One row per hidden unit.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub head_config: HeadConfig,
    pub weights: Weights,
    #[serde(default)]
    pub training: Option<TrainingMeta>,
}

impl Checkpoint {
    pub fn from_network(net: &HeadNetwork, training: Option<TrainingMeta>) -> Self {
        let h = net.config().hidden_width;
        Checkpoint {
            format_version: FORMAT_VERSION,
            head_config: *net.config(),
            weights: Weights {
                w1: (0..h).map(|u| net.w1_row(u).to_vec()).collect(),
                b1: net.b1().to_vec(),
                w2: net.w2().to_vec(),
                b2: net.b2(),
            },
            training,
        }
    }

    /// Rebuilds the network, reporting shape problems against `path`.
    pub fn to_network(&self, path: &Path) -> std::result::Result<HeadNetwork, CheckpointError> {
        let cfg = self.head_config;
        let config_err = |reason: String| CheckpointError::ConfigMismatch {
            path: path.to_path_buf(),
            reason,
        };
        let shape_err = |reason: String| CheckpointError::ShapeMismatch {
            path: path.to_path_buf(),
            reason,
        };
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        let w = &self.weights;
        if w.w1.len() != cfg.hidden_width {
            return Err(shape_err(format!(
                "w1 has {} rows, hidden_width is {}",
                w.w1.len(),
                cfg.hidden_width
            )));
        }
        if let Some((u, row)) = w.w1.iter().enumerate().find(|(_, r)| r.len() != cfg.input_dim) {
            return Err(shape_err(format!(
                "w1 row {u} has {} entries, input_dim is {}",
                row.len(),
                cfg.input_dim
            )));
        }
        for (name, len) in [("b1", w.b1.len()), ("w2", w.w2.len())] {
            if len != cfg.hidden_width {
                return Err(shape_err(format!(
                    "{name} has {len} entries, hidden_width is {}",
                    cfg.hidden_width
                )));
            }
        }
        let flat: Vec<f64> = w.w1.iter().flatten().copied().collect();
        HeadNetwork::from_parts(cfg, flat, w.b1.clone(), w.w2.clone(), w.b2).map_err(|e| shape_err(e.to_string()))
    }
}

pub fn save_checkpoint(net: &HeadNetwork, training: Option<TrainingMeta>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e| {
        Error::from(CheckpointError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    let ckpt = Checkpoint::from_network(net, training);
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    serde_json::to_writer(&mut w, &ckpt).map_err(|e| io_err(e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err)
}

/// Reads the raw checkpoint document.
pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CheckpointError::Missing(path.to_path_buf()),
        _ => CheckpointError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file)).map_err(|e| CheckpointError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if ckpt.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Malformed {
            path: path.to_path_buf(),
            reason: format!("unsupported format_version {}", ckpt.format_version),
        }
        .into());
    }
    Ok(ckpt)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<HeadNetwork> {
    let path = path.as_ref();
    Ok(read_checkpoint(path)?.to_network(path)?)
}
