//! Output-layer activations for soft-label prediction.
//!
//! The sinusoidal step function (SSF) is piecewise: a linear tail of slope `theta`
//! below zero, one half-period sine segment on each interval `[n/a, (n+1)/a)`, and a
//! linear tail again from one upwards. Every segment maps its interval onto itself
//! with zero slope at the grid points `k/a` and slope `pi/2` at the segment midpoints,
//! so predictions are drawn towards the values a soft label can actually take.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Right-hand tail of the SSF for `x >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TailMode {
    /// `1 + theta * x`. Jumps by `theta` at `x = 1`.
    #[default]
    Jump,
    /// `1 + theta * (x - 1)`. Continuous everywhere.
    Continuous,
}

/// Parameters of the sinusoidal step function.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SsfParams {
    /// Number of annotators; the function has `a` sinusoidal segments.
    pub a: u32,
    /// Slope of both linear tails.
    pub theta: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tail_mode: TailMode,
}

impl SsfParams {
    pub fn new(a: u32, theta: f64) -> Result<Self> {
        Self::with_tail(a, theta, TailMode::Jump)
    }

    pub fn with_tail(a: u32, theta: f64, tail_mode: TailMode) -> Result<Self> {
        let params = SsfParams { a, theta, tail_mode };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a < 1 {
            return Err(Error::invalid("SSF annotator count a must be >= 1"));
        }
        if !self.theta.is_finite() || self.theta < 0.0 {
            return Err(Error::invalid("SSF slope theta must be finite and >= 0"));
        }
        Ok(())
    }

    /// Index of the sinusoidal segment holding `x`, or `None` on the tails.
    ///
    /// Intervals are half-open, `[n/a, (n+1)/a)`, with boundaries compared against
    /// `n as f64 / a as f64` so that `x = k/a` always selects segment `k`.
    fn segment(&self, x: f64) -> Option<u32> {
        if !(0.0..1.0).contains(&x) {
            return None;
        }
        let a = self.a;
        let af = f64::from(a);
        let mut n = libm::floor(x * af).clamp(0.0, af - 1.0) as u32;
        if n + 1 < a && x >= f64::from(n + 1) / af {
            n += 1;
        }
        if n > 0 && x < f64::from(n) / af {
            n -= 1;
        }
        Some(n)
    }

    /// Phase of the sine on segment `n`: `pi * (2ax - (2n+1)) / 2`, within `[-pi/2, pi/2)`.
    fn phase(&self, n: u32, x: f64) -> f64 {
        let af = f64::from(self.a);
        let offset = f64::from(2 * n + 1);
        PI * (2.0 * af * x - offset) / 2.0
    }

    /// Unchecked SSF value; NaN propagates.
    pub fn value(&self, x: f64) -> f64 {
        match self.segment(x) {
            Some(n) => {
                let af = f64::from(self.a);
                let offset = f64::from(2 * n + 1);
                (libm::sin(self.phase(n, x)) + offset) / (2.0 * af)
            }
            None if x < 0.0 => self.theta * x,
            None => match self.tail_mode {
                TailMode::Jump => 1.0 + self.theta * x,
                TailMode::Continuous => 1.0 + self.theta * (x - 1.0),
            },
        }
    }

    /// Unchecked SSF derivative, using the same branch selection as [`SsfParams::value`].
    pub fn derivative(&self, x: f64) -> f64 {
        match self.segment(x) {
            Some(n) => FRAC_PI_2 * libm::cos(self.phase(n, x)),
            None if x.is_nan() => f64::NAN,
            None => self.theta,
        }
    }

    /// Breakpoints `0, 1/a, ..., 1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let af = f64::from(self.a);
        (0..=self.a).map(|k| f64::from(k) / af).collect()
    }
}

/// Parameters of the widened sigmoid `1 / (1 + exp(-x / widening))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SigmoidParams {
    pub widening: f64,
}

impl Default for SigmoidParams {
    fn default() -> Self {
        SigmoidParams { widening: 5.0 }
    }
}

impl SigmoidParams {
    pub fn new(widening: f64) -> Result<Self> {
        let params = SigmoidParams { widening };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.widening.is_finite() || self.widening <= 0.0 {
            return Err(Error::invalid("sigmoid widening must be finite and > 0"));
        }
        Ok(())
    }

    /// Always strictly inside `(0, 1)`: saturated outputs are held at the nearest
    /// representable values.
    pub fn value(&self, x: f64) -> f64 {
        let t = x / self.widening;
        let s = if t >= 0.0 {
            1.0 / (1.0 + libm::exp(-t))
        } else {
            let e = libm::exp(t);
            e / (1.0 + e)
        };
        s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let s = self.value(x);
        s * (1.0 - s) / self.widening
    }
}

/// The valid soft-label values `{0, 1/a, ..., 1}` for `a` annotators.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGrid {
    a: u32,
    grid: Vec<f64>,
}

impl StepGrid {
    pub fn new(a: u32) -> Result<Self> {
        if a < 1 {
            return Err(Error::invalid("step grid annotator count a must be >= 1"));
        }
        let af = f64::from(a);
        let grid = (0..=a).map(|k| f64::from(k) / af).collect();
        Ok(StepGrid { a, grid })
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn values(&self) -> &[f64] {
        &self.grid
    }

    /// Nearest grid value to `y`. Out-of-range inputs clamp to the ends and exact
    /// midpoints go to the larger neighbour.
    ///
    /// Nearness is judged against the exact grid `k/a`: `y` is compared with the
    /// correctly rounded midpoint `(2k+1)/(2a)`, so `0.3` with `a = 5` is a tie even
    /// though `0.2` and `0.4` are not exactly representable.
    pub fn quantize(&self, y: f64) -> f64 {
        let a = self.a;
        let af = f64::from(a);
        if y.is_nan() || y <= 0.0 {
            return self.grid[0];
        }
        if y >= 1.0 {
            return self.grid[a as usize];
        }
        // floor(y * a) may be off by one next to a grid point; either neighbour
        // segment gives the same answer there.
        let k = (libm::floor(y * af) as u32).min(a - 1);
        let mid = f64::from(2 * k + 1) / (2.0 * af);
        self.grid[(k + u32::from(y >= mid)) as usize]
    }

    /// Distance from `y` to the nearest grid value.
    pub fn distance(&self, y: f64) -> f64 {
        libm::fabs(y - self.quantize(y))
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("activation input must be finite"))
    }
}

pub fn ssf_value(params: &SsfParams, x: f64) -> Result<f64> {
    params.validate()?;
    check_finite(x)?;
    Ok(params.value(x))
}

pub fn ssf_derivative(params: &SsfParams, x: f64) -> Result<f64> {
    params.validate()?;
    check_finite(x)?;
    Ok(params.derivative(x))
}

pub fn widened_sigmoid_value(params: &SigmoidParams, x: f64) -> Result<f64> {
    params.validate()?;
    check_finite(x)?;
    Ok(params.value(x))
}

pub fn widened_sigmoid_derivative(params: &SigmoidParams, x: f64) -> Result<f64> {
    params.validate()?;
    check_finite(x)?;
    Ok(params.derivative(x))
}

pub fn step_quantize(grid: &StepGrid, y: f64) -> Result<f64> {
    check_finite(y)?;
    Ok(grid.quantize(y))
}

#[inline]
pub fn relu_value(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient at zero is taken as 0.
#[inline]
pub fn relu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}
