//! Sampled activation curves as whitespace-separated text.

use std::fmt::Write as _;

use softlabel_core::activations::{relu_derivative, relu_value, SigmoidParams, SsfParams, StepGrid};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Ssf(SsfParams),
    Sigmoid(SigmoidParams),
    Step(StepGrid),
    Relu,
}

impl Curve {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Curve::Ssf(p) => p.value(x),
            Curve::Sigmoid(p) => p.value(x),
            Curve::Step(g) => g.quantize(x),
            Curve::Relu => relu_value(x),
        }
    }

    /// The step function is flat almost everywhere; its derivative is reported as 0.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Curve::Ssf(p) => p.derivative(x),
            Curve::Sigmoid(p) => p.derivative(x),
            Curve::Step(_) => 0.0,
            Curve::Relu => relu_derivative(x),
        }
    }
}

/// `samples` evenly spaced abscissae from `min` to `max`, both ends included exactly.
pub fn sample_points(min: f64, max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::Config("plot needs at least 2 samples".into()));
    }
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::Config(format!("invalid plot range [{min}, {max}]")));
    }
    let step = (max - min) / (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| if i == samples - 1 { max } else { min + i as f64 * step })
        .collect())
}

/// Renders `x y [dy]` rows under a `#` header line.
pub fn render(curve: &Curve, xs: &[f64], with_derivative: bool) -> String {
    let mut out = String::from(if with_derivative { "# x y dy\n" } else { "# x y\n" });
    for &x in xs {
        let y = curve.value(x);
        if with_derivative {
            writeln!(out, "{x} {y} {}", curve.derivative(x)).unwrap();
        } else {
            writeln!(out, "{x} {y}").unwrap();
        }
    }
    out
}

/// Parses rendered rows back into columns, skipping comment lines.
pub fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}
