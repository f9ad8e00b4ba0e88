//! The classifier head: `dropout -> dense(hidden, ReLU) -> dropout -> dense(1) -> activation`,
//! with hand-written backpropagation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::activations::{relu_derivative, relu_value, SigmoidParams, SsfParams};
use crate::error::{Error, Result};
use crate::seed::{derive_key, rng_for, salt, splitmix64, unit_f64};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum OutputActivation {
    WidenedSigmoid(SigmoidParams),
    Ssf(SsfParams),
}

impl OutputActivation {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            OutputActivation::WidenedSigmoid(p) => p.value(x),
            OutputActivation::Ssf(p) => p.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            OutputActivation::WidenedSigmoid(p) => p.derivative(x),
            OutputActivation::Ssf(p) => p.derivative(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OutputActivation::WidenedSigmoid(_) => "sigmoid",
            OutputActivation::Ssf(_) => "ssf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OutputActivation::WidenedSigmoid(p) => p.validate(),
            OutputActivation::Ssf(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeadConfig {
    pub input_dim: usize,
    pub hidden_width: usize,
    /// Dropout rate on the input features.
    pub dropout1: f64,
    /// Dropout rate on the hidden layer output.
    pub dropout2: f64,
    pub output_activation: OutputActivation,
}

impl HeadConfig {
    /// Defaults: 20 hidden units, dropout 0.2 before and 0.15 after the hidden layer.
    pub fn new(input_dim: usize, output_activation: OutputActivation) -> Self {
        HeadConfig {
            input_dim,
            hidden_width: 20,
            dropout1: 0.2,
            dropout2: 0.15,
            output_activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("input_dim must be >= 1"));
        }
        if self.hidden_width == 0 {
            return Err(Error::invalid("hidden_width must be >= 1"));
        }
        for (name, rate) in [("dropout1", self.dropout1), ("dropout2", self.dropout2)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "{name} must lie in [0, 1), got {rate}"
                )));
            }
        }
        self.output_activation.validate()
    }
}

/// Parameters of a [`HeadNetwork`]. `w1` is row-major, `hidden_width x input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadNetwork {
    config: HeadConfig,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

/// Gradients with the same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Gradients {
    pub fn zeros(config: &HeadConfig) -> Self {
        Gradients {
            w1: vec![0.0; config.hidden_width * config.input_dim],
            b1: vec![0.0; config.hidden_width],
            w2: vec![0.0; config.hidden_width],
            b2: 0.0,
        }
    }

    pub fn clear(&mut self) {
        self.w1.iter_mut().for_each(|g| *g = 0.0);
        self.b1.iter_mut().for_each(|g| *g = 0.0);
        self.w2.iter_mut().for_each(|g| *g = 0.0);
        self.b2 = 0.0;
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b;
        }
        self.b2 += other.b2;
    }

    pub fn blocks(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, core::slice::from_ref(&self.b2)]
    }
}

/// Inverted-dropout masks for one training example.
///
/// The input mask is evaluated lazily per feature index from a key, so it costs
/// nothing for the zero entries of a sparse input. Kept units are scaled by
/// `1 / (1 - rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    input_rate: f64,
    input_key: u64,
    hidden: Vec<f64>,
}

impl DropoutMask {
    /// Masks for example `example` of batch `batch` in epoch `epoch`.
    pub fn derive(config: &HeadConfig, seed: u64, epoch: u64, batch: u64, example: u64) -> Self {
        let input_key = derive_key(&[seed, salt::DROPOUT_INPUT, epoch, batch, example]);
        let mut rng = rng_for(&[seed, salt::DROPOUT_HIDDEN, epoch, batch, example]);
        let rate = config.dropout2;
        let keep = 1.0 / (1.0 - rate);
        let hidden = (0..config.hidden_width)
            .map(|_| {
                if rate > 0.0 && rng.gen::<f64>() < rate {
                    0.0
                } else if rate > 0.0 {
                    keep
                } else {
                    1.0
                }
            })
            .collect();
        DropoutMask {
            input_rate: config.dropout1,
            input_key,
            hidden,
        }
    }

    /// A mask that keeps everything.
    pub fn identity(config: &HeadConfig) -> Self {
        DropoutMask {
            input_rate: 0.0,
            input_key: 0,
            hidden: vec![1.0; config.hidden_width],
        }
    }

    pub fn input_scale(&self, index: usize) -> f64 {
        if self.input_rate <= 0.0 {
            return 1.0;
        }
        let u = unit_f64(splitmix64(self.input_key ^ splitmix64(index as u64)));
        if u < self.input_rate {
            0.0
        } else {
            1.0 / (1.0 - self.input_rate)
        }
    }

    pub fn hidden_scales(&self) -> &[f64] {
        &self.hidden
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ForwardMode<'a> {
    Train(&'a DropoutMask),
    Eval,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Non-zero inputs after input dropout.
    pub input: Vec<(usize, f64)>,
    /// Hidden pre-activations.
    pub z1: Vec<f64>,
    /// Hidden dropout scales (all ones in eval mode).
    pub hidden_scale: Vec<f64>,
    /// Hidden outputs after ReLU and dropout.
    pub hidden: Vec<f64>,
    /// Output pre-activation.
    pub z2: f64,
    pub prediction: f64,
}

fn uniform_block(rng: &mut impl Rng, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
}

pub fn init_network(config: HeadConfig, seed: u64) -> Result<HeadNetwork> {
    config.validate()?;
    let mut rng = rng_for(&[seed, salt::INIT]);
    let (d, h) = (config.input_dim, config.hidden_width);
    let w1 = uniform_block(&mut rng, h * d, d, h);
    let w2 = uniform_block(&mut rng, h, h, 1);
    Ok(HeadNetwork {
        config,
        w1,
        b1: vec![0.0; h],
        w2,
        b2: 0.0,
    })
}

impl HeadNetwork {
    /// Assembles a network from explicit parameters, checking every shape.
    pub fn from_parts(config: HeadConfig, w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>, b2: f64) -> Result<Self> {
        config.validate()?;
        let (d, h) = (config.input_dim, config.hidden_width);
        for (what, expected, found) in [("w1", h * d, w1.len()), ("b1", h, b1.len()), ("w2", h, w2.len())] {
            if expected != found {
                return Err(Error::DimensionMismatch { what, expected, found });
            }
        }
        let net = HeadNetwork { config, w1, b1, w2, b2 };
        if !net.is_finite() {
            return Err(Error::invalid("network parameters must be finite"));
        }
        Ok(net)
    }

    pub fn config(&self) -> &HeadConfig {
        &self.config
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn w1_row(&self, unit: usize) -> &[f64] {
        let d = self.config.input_dim;
        &self.w1[unit * d..(unit + 1) * d]
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite()
    }

    /// Mutable parameter blocks in the order `w1, b1, w2, b2`, matching [`Gradients::blocks`].
    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            core::slice::from_mut(&mut self.b2),
        ]
    }

    pub fn forward(&self, features: &SparseVector, mode: ForwardMode<'_>) -> Result<ForwardCache> {
        let d = self.config.input_dim;
        if features.dim() != d {
            return Err(Error::DimensionMismatch {
                what: "features",
                expected: d,
                found: features.dim(),
            });
        }
        let input: Vec<(usize, f64)> = match mode {
            ForwardMode::Eval => features.iter().collect(),
            ForwardMode::Train(mask) => features
                .iter()
                .filter_map(|(i, v)| {
                    let s = mask.input_scale(i);
                    (s != 0.0).then_some((i, v * s))
                })
                .collect(),
        };
        if input.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        let h = self.config.hidden_width;
        let hidden_scale = match mode {
            ForwardMode::Eval => vec![1.0; h],
            ForwardMode::Train(mask) => {
                if mask.hidden.len() != h {
                    return Err(Error::DimensionMismatch {
                        what: "dropout mask",
                        expected: h,
                        found: mask.hidden.len(),
                    });
                }
                mask.hidden.clone()
            }
        };
        let z1: Vec<f64> = (0..h)
            .map(|u| {
                let row = self.w1_row(u);
                self.b1[u] + input.iter().map(|&(i, v)| row[i] * v).sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = z1.iter().zip(&hidden_scale).map(|(&z, &s)| relu_value(z) * s).collect();
        let z2 = self.b2 + hidden.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>();
        let prediction = self.config.output_activation.value(z2);
        Ok(ForwardCache {
            input,
            z1,
            hidden_scale,
            hidden,
            z2,
            prediction,
        })
    }

    /// Eval-mode prediction.
    pub fn predict(&self, features: &SparseVector) -> Result<f64> {
        Ok(self.forward(features, ForwardMode::Eval)?.prediction)
    }

    /// Adds `d_loss_d_pred * d prediction / d params` into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache, d_loss_d_pred: f64, grads: &mut Gradients) -> Result<()> {
        let (d, h) = (self.config.input_dim, self.config.hidden_width);
        if cache.z1.len() != h || grads.b1.len() != h || grads.w1.len() != h * d {
            return Err(Error::DimensionMismatch {
                what: "forward cache",
                expected: h,
                found: cache.z1.len(),
            });
        }
        let dz2 = d_loss_d_pred * self.config.output_activation.derivative(cache.z2);
        grads.b2 += dz2;
        for u in 0..h {
            grads.w2[u] += dz2 * cache.hidden[u];
            let dz1 = dz2 * self.w2[u] * cache.hidden_scale[u] * relu_derivative(cache.z1[u]);
            if dz1 == 0.0 {
                continue;
            }
            grads.b1[u] += dz1;
            let row = &mut grads.w1[u * d..(u + 1) * d];
            for &(i, v) in &cache.input {
                row[i] += dz1 * v;
            }
        }
        Ok(())
    }

    pub fn backward(&self, cache: &ForwardCache, d_loss_d_pred: f64) -> Result<Gradients> {
        let mut grads = Gradients::zeros(&self.config);
        self.backward_into(cache, d_loss_d_pred, &mut grads)?;
        Ok(grads)
    }
}

/// Free-function form of [`HeadNetwork::forward`].
pub fn forward(net: &HeadNetwork, features: &SparseVector, mode: ForwardMode<'_>) -> Result<(f64, ForwardCache)> {
    let cache = net.forward(features, mode)?;
    Ok((cache.prediction, cache))
}

/// Free-function form of [`HeadNetwork::backward`].
pub fn backward(net: &HeadNetwork, cache: &ForwardCache, d_loss_d_pred: f64) -> Result<Gradients> {
    net.backward(cache, d_loss_d_pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigmoid_cfg(input_dim: usize) -> HeadConfig {
        HeadConfig::new(input_dim, OutputActivation::WidenedSigmoid(SigmoidParams::default()))
    }

    fn zero_net(act: OutputActivation) -> HeadNetwork {
        let cfg = HeadConfig::new(4, act);
        HeadNetwork::from_parts(cfg, vec![0.0; 80], vec![0.0; 20], vec![0.0; 20], 0.0).unwrap()
    }

    #[test]
    fn init_has_zero_biases_and_is_deterministic() {
        let a = init_network(sigmoid_cfg(4), 42).unwrap();
        let b = init_network(sigmoid_cfg(4), 42).unwrap();
        assert!(a.b1().iter().all(|&b| b == 0.0));
        assert_eq!(a.b2(), 0.0);
        assert_eq!(a, b);
        let c = init_network(sigmoid_cfg(4), 43).unwrap();
        assert_ne!(a.w1(), c.w1());
    }

    #[test]
    fn init_respects_fan_bound() {
        let net = init_network(sigmoid_cfg(16384), 1).unwrap();
        let bound = 0.019_124_969_220_777_43; // sqrt(6 / 16404)
        assert!(net.w1().iter().all(|w| w.abs() <= bound));
        assert!(net.w1().iter().any(|w| w.abs() > 0.9 * bound));
        let bound2 = libm::sqrt(6.0 / 21.0);
        assert!(net.w2().iter().all(|w| w.abs() <= bound2));
    }

    #[test]
    fn zero_network_outputs() {
        let x = SparseVector::zeros(4);
        let sig = zero_net(OutputActivation::WidenedSigmoid(SigmoidParams::default()));
        assert_eq!(sig.predict(&x).unwrap(), 0.5);
        let ssf = zero_net(OutputActivation::Ssf(SsfParams::new(3, 0.05).unwrap()));
        assert_eq!(ssf.predict(&x).unwrap(), 0.0);
    }

    #[test]
    fn eval_ignores_dropout_seed() {
        let cfg = sigmoid_cfg(6);
        let net = init_network(cfg, 3).unwrap();
        let x = SparseVector::from_dense(&[0.1, 0.5, 0.0, 0.3, 0.2, 0.9]).unwrap();
        let first = net.predict(&x).unwrap();
        let _ = DropoutMask::derive(&cfg, 99, 0, 0, 0);
        assert_eq!(first, net.predict(&x).unwrap());
        let m1 = DropoutMask::derive(&cfg, 1, 0, 0, 0);
        let m2 = DropoutMask::derive(&cfg, 2, 0, 0, 0);
        let t1 = net.forward(&x, ForwardMode::Train(&m1)).unwrap().prediction;
        let t2 = net.forward(&x, ForwardMode::Train(&m2)).unwrap().prediction;
        assert!(t1 != first || t2 != first);
    }

    #[test]
    fn dimension_mismatch() {
        let net = init_network(sigmoid_cfg(4), 0).unwrap();
        let err = net.predict(&SparseVector::zeros(5)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                found: 5,
                ..
            }
        ));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let mut cfg = sigmoid_cfg(5);
        cfg.dropout1 = 0.0;
        cfg.dropout2 = 0.0;
        let net = init_network(cfg, 11).unwrap();
        let x = SparseVector::from_dense(&[0.4, -0.2, 0.1, 0.0, 0.7]).unwrap();
        let cache = net.forward(&x, ForwardMode::Eval).unwrap();
        let zero = net.backward(&cache, 0.0).unwrap();
        assert!(zero.blocks().iter().all(|b| b.iter().all(|&g| g == 0.0)));
        let g1 = net.backward(&cache, 1.5).unwrap();
        let g2 = net.backward(&cache, 3.0).unwrap();
        for (a, b) in g1.blocks().iter().zip(g2.blocks().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(2.0 * x, *y);
            }
        }
    }

    #[test]
    fn from_parts_checks_shapes() {
        let cfg = sigmoid_cfg(4);
        let err = HeadNetwork::from_parts(cfg, vec![0.0; 79], vec![0.0; 20], vec![0.0; 20], 0.0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { what: "w1", .. }));
        let mut bad = cfg;
        bad.dropout1 = 1.0;
        assert!(init_network(bad, 0).is_err());
    }

    #[test]
    fn masks_are_reproducible() {
        let cfg = sigmoid_cfg(100);
        let a = DropoutMask::derive(&cfg, 5, 1, 2, 3);
        let b = DropoutMask::derive(&cfg, 5, 1, 2, 3);
        assert_eq!(a, b);
        let c = DropoutMask::derive(&cfg, 5, 1, 2, 4);
        assert_ne!(a, c);
    }
}
