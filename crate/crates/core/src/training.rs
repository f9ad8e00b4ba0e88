//! Mini-batch training of a [`HeadNetwork`] against soft labels, keeping the
//! parameters with the lowest validation loss.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::{featurize, DisagreementDataset, FeaturizerConfig, Instance};
use crate::error::{Error, Result};
use crate::network::{DropoutMask, ForwardMode, Gradients, HeadNetwork, OutputActivation};
use crate::seed::{rng_for, salt};
use crate::sparse::SparseVector;

pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Optimizer {
    pub const fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Self::adam()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub loss_clamp_eps: f64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: Optimizer::adam(),
            seed: 0,
            loss_clamp_eps: DEFAULT_CLAMP_EPS,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::invalid("learning_rate must be finite and >= 0"));
        }
        if !(self.loss_clamp_eps > 0.0 && self.loss_clamp_eps < 0.5) {
            return Err(Error::invalid("loss_clamp_eps must lie in (0, 0.5)"));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps.is_nan() || eps <= 0.0 {
                return Err(Error::invalid("Adam needs beta1, beta2 in [0, 1) and eps > 0"));
            }
        }
        Ok(())
    }
}

fn check_target(target: f64) -> Result<()> {
    if (0.0..=1.0).contains(&target) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!(
            "cross-entropy target {target} outside [0, 1]"
        )))
    }
}

/// Binary cross-entropy against a probabilistic target, with the prediction
/// clamped to `[clamp_eps, 1 - clamp_eps]`.
pub fn soft_cross_entropy(prediction: f64, target: f64, clamp_eps: f64) -> Result<f64> {
    check_target(target)?;
    let p = prediction.clamp(clamp_eps, 1.0 - clamp_eps);
    let loss = -(target * libm::log(p) + (1.0 - target) * libm::log(1.0 - p));
    // -0.0 for a perfect match at the clamp boundary
    Ok(loss.max(0.0))
}

/// `d loss / d prediction`. The clamp passes gradient through inside its interval
/// and blocks it outside.
pub fn soft_cross_entropy_gradient(prediction: f64, target: f64, clamp_eps: f64) -> Result<f64> {
    check_target(target)?;
    if prediction < clamp_eps || prediction > 1.0 - clamp_eps {
        return Ok(0.0);
    }
    let p = prediction;
    Ok((p - target) / (p * (1.0 - p)))
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub is_best: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    /// 1-based epoch of the first minimum of `val_losses`.
    pub best_epoch: usize,
    pub best_validation_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    /// Parameters at `best_epoch`.
    pub best: HeadNetwork,
    /// Parameters after the final epoch.
    pub last: HeadNetwork,
}

/// A featurized example.
#[derive(Debug, Clone)]
pub struct Example {
    pub features: SparseVector,
    pub target: f64,
}

pub fn featurize_split(featurizer: &FeaturizerConfig, split: &[Instance]) -> Result<Vec<Example>> {
    split
        .iter()
        .map(|inst| {
            Ok(Example {
                features: featurize(featurizer, &inst.text)?,
                target: inst.soft_label,
            })
        })
        .collect()
}

/// Mean Eval-mode loss over `examples`.
pub fn mean_loss(net: &HeadNetwork, examples: &[Example], clamp_eps: f64) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += soft_cross_entropy(net.predict(&ex.features)?, ex.target, clamp_eps)?;
    }
    Ok(total / examples.len() as f64)
}

struct OptimizerState {
    step: i32,
    m: [Vec<f64>; 4],
    v: [Vec<f64>; 4],
}

impl OptimizerState {
    fn new(grads: &Gradients) -> Self {
        let zeros = |b: &[f64]| vec![0.0; b.len()];
        let blocks = grads.blocks();
        OptimizerState {
            step: 0,
            m: blocks.map(zeros),
            v: blocks.map(zeros),
        }
    }

    fn apply(&mut self, net: &mut HeadNetwork, grads: &Gradients, optimizer: Optimizer, lr: f64) {
        self.step += 1;
        let gblocks = grads.blocks();
        match optimizer {
            Optimizer::Sgd => {
                for (params, g) in net.blocks_mut().into_iter().zip(gblocks) {
                    for (p, g) in params.iter_mut().zip(g) {
                        *p -= lr * g;
                    }
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let bc1 = 1.0 - libm::pow(beta1, f64::from(self.step));
                let bc2 = 1.0 - libm::pow(beta2, f64::from(self.step));
                for (k, (params, g)) in net.blocks_mut().into_iter().zip(gblocks).enumerate() {
                    let (m, v) = (&mut self.m[k], &mut self.v[k]);
                    for j in 0..params.len() {
                        let gj = g[j];
                        m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                        v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                        let m_hat = m[j] / bc1;
                        let v_hat = v[j] / bc2;
                        params[j] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
                    }
                }
            }
        }
    }
}

/// Checks that an SSF head matches the dataset's annotator count.
pub fn check_annotators(activation: &OutputActivation, data: &DisagreementDataset) -> Result<()> {
    if let OutputActivation::Ssf(p) = activation {
        if data.annotator_count() != Some(p.a) {
            return Err(Error::AnnotatorMismatch {
                expected: p.a,
                found: data.annotator_count(),
            });
        }
    }
    Ok(())
}

/// Trains on the dataset's train split, selecting on its validation split.
///
/// `on_epoch` is called once per epoch, in order.
pub fn train(
    net: HeadNetwork,
    data: &DisagreementDataset,
    featurizer: &FeaturizerConfig,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    featurizer.validate()?;
    if net.config().input_dim != featurizer.dimension {
        return Err(Error::DimensionMismatch {
            what: "network input vs featurizer",
            expected: featurizer.dimension,
            found: net.config().input_dim,
        });
    }
    check_annotators(&net.config().output_activation, data)?;
    if data.train().is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if data.validation().is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    let train_set = featurize_split(featurizer, data.train())?;
    let val_set = featurize_split(featurizer, data.validation())?;
    train_examples(net, &train_set, &val_set, cfg, on_epoch)
}

/// Training loop over pre-featurized examples.
pub fn train_examples(
    mut net: HeadNetwork,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    let head = *net.config();
    let eps = cfg.loss_clamp_eps;
    let mut grads = Gradients::zeros(&head);
    let mut state = OptimizerState::new(&grads);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut train_losses = Vec::with_capacity(cfg.epochs);
    let mut val_losses = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, HeadNetwork)> = None;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.sort_unstable();
            order.shuffle(&mut rng_for(&[cfg.seed, salt::SHUFFLE, epoch as u64]));
        }
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for (e, &idx) in batch.iter().enumerate() {
                let ex = &train_set[idx];
                let mask = DropoutMask::derive(&head, cfg.seed, epoch as u64, b as u64, e as u64);
                let cache = net.forward(&ex.features, ForwardMode::Train(&mask))?;
                let loss = soft_cross_entropy(cache.prediction, ex.target, eps)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch: b });
                }
                epoch_loss += loss;
                let upstream = soft_cross_entropy_gradient(cache.prediction, ex.target, eps)? * scale;
                net.backward_into(&cache, upstream, &mut grads)?;
            }
            state.apply(&mut net, &grads, cfg.optimizer, cfg.learning_rate);
            if !net.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = mean_loss(&net, val_set, eps)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: order.len().div_ceil(cfg.batch_size),
            });
        }
        let is_best = best.as_ref().is_none_or(|(_, l, _)| val_loss < *l);
        if is_best {
            best = Some((epoch, val_loss, net.clone()));
        }
        train_losses.push(train_loss);
        val_losses.push(val_loss);
        on_epoch(&EpochRecord {
            epoch,
            train_loss,
            val_loss,
            is_best,
        });
    }

    let (best_epoch, best_validation_loss, best_net) = best.expect("epochs >= 1");
    Ok(TrainOutcome {
        report: TrainReport {
            train_losses,
            val_losses,
            best_epoch,
            best_validation_loss,
        },
        best: best_net,
        last: net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = core::f64::consts::LN_2;

    #[test]
    fn loss_examples() {
        assert!((soft_cross_entropy(0.5, 0.5, 1e-7).unwrap() - LN2).abs() < 1e-12);
        let near = soft_cross_entropy(1.0 - 1e-7, 1.0, 1e-7).unwrap();
        assert!(near >= 0.0 && (near - 1e-7).abs() < 1e-12);
        let over = soft_cross_entropy(1.2, 1.0, 1e-7).unwrap();
        assert!(over.is_finite() && (over - 1e-7).abs() < 1e-12);
        let under = soft_cross_entropy(-3.0, 0.0, 1e-7).unwrap();
        assert!(under.is_finite() && under < 1e-6);
        assert!(soft_cross_entropy(0.5, 1.1, 1e-7).is_err());
        assert!(soft_cross_entropy(0.5, -0.1, 1e-7).is_err());
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(soft_cross_entropy_gradient(0.5, 0.5, 1e-7).unwrap(), 0.0);
        let g = soft_cross_entropy_gradient(0.25, 0.75, 1e-7).unwrap();
        assert!((g + 8.0 / 3.0).abs() < 1e-12);
        let h = 1e-6;
        let fd = (soft_cross_entropy(0.25 + h, 0.75, 1e-7).unwrap()
            - soft_cross_entropy(0.25 - h, 0.75, 1e-7).unwrap())
            / (2.0 * h);
        assert!((fd - g).abs() < 1e-6);
        assert_eq!(soft_cross_entropy_gradient(1.2, 1.0, 1e-7).unwrap(), 0.0);
        assert_eq!(soft_cross_entropy_gradient(-0.2, 0.0, 1e-7).unwrap(), 0.0);
        assert!(soft_cross_entropy_gradient(0.5, 2.0, 1e-7).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            loss_clamp_eps: 0.5,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
