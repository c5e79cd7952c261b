//! Element-wise activation functions and activation dispatch.
//!
//! The functions here are the mathematically intended ones, written so they
//! stay finite over the whole representable range: sign-split forms for
//! sigmoid and tanh, max subtraction for softmax. The published MicroPython
//! dispatcher routes `softmax` and `leaky_relu` to other functions; that
//! behaviour is selected with [`DispatchMode::PaperCompat`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

pub const DEFAULT_LEAKY_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Sigmoid,
    Relu,
    LeakyRelu { alpha: f64 },
    Tanh,
    Softmax,
}

impl Activation {
    pub const NAMES: [&'static str; 5] = ["sigmoid", "relu", "leaky_relu", "tanh", "softmax"];

    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Activation::LeakyRelu { alpha })
    }

    /// Parses a lowercase activation name. `alpha` only applies to
    /// `leaky_relu` and defaults to [`DEFAULT_LEAKY_ALPHA`].
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        let kind = match name {
            "sigmoid" => Activation::Sigmoid,
            "relu" => Activation::Relu,
            "leaky_relu" => Activation::leaky_relu(alpha.unwrap_or(DEFAULT_LEAKY_ALPHA))?,
            "tanh" => Activation::Tanh,
            "softmax" => Activation::Softmax,
            other => return Err(Error::UnknownActivation(other.to_string())),
        };
        Ok(kind)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Tanh => "tanh",
            Activation::Softmax => "softmax",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Activation::LeakyRelu { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// True for functions whose output at one position depends on the
    /// other positions of the input vector.
    pub fn is_normalizing(&self) -> bool {
        matches!(self, Activation::Softmax)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::LeakyRelu { alpha } if *alpha != DEFAULT_LEAKY_ALPHA => {
                write!(f, "leaky_relu(alpha={alpha})")
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::parse(s, None)
    }
}

/// Which semantics the `neuron` dispatcher follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchMode {
    /// Every activation name runs its own function; softmax normalizes
    /// across the units of a layer for each sample.
    Corrected,
    /// Reproduces the published dispatcher: `softmax` runs tanh and
    /// `leaky_relu` runs relu.
    PaperCompat,
}

impl DispatchMode {
    /// The activation that actually runs for `requested` under this mode.
    pub fn resolve(self, requested: Activation) -> Activation {
        match (self, requested) {
            (DispatchMode::PaperCompat, Activation::Softmax) => Activation::Tanh,
            (DispatchMode::PaperCompat, Activation::LeakyRelu { .. }) => Activation::Relu,
            (_, kind) => kind,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DispatchMode::Corrected => "corrected",
            DispatchMode::PaperCompat => "paper_compat",
        }
    }
}

impl fmt::Display for DispatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DispatchMode {
    type Err = Error;

    /// Accepts both the file spelling (`paper_compat`) and the flag
    /// spelling (`paper-compat`).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(DispatchMode::Corrected),
            "paper_compat" | "paper-compat" => Ok(DispatchMode::PaperCompat),
            other => Err(Error::UnknownDispatchMode(other.to_string())),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn tanh_scalar(x: f64) -> f64 {
    // tanh(|x|) = (1 - e^{-2|x|}) / (1 + e^{-2|x|}), via expm1 for accuracy near 0.
    let m = (-2.0 * x.abs()).exp_m1();
    let t = -m / (2.0 + m);
    if x < 0.0 {
        -t
    } else {
        t
    }
}

#[inline]
pub fn relu_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn leaky_relu_scalar(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

pub fn sigmoid(x: &[f64]) -> Vector {
    x.iter().copied().map(sigmoid_scalar).collect()
}

pub fn relu(x: &[f64]) -> Vector {
    x.iter().copied().map(relu_scalar).collect()
}

pub fn leaky_relu(x: &[f64], alpha: f64) -> Result<Vector> {
    check_alpha(alpha)?;
    Ok(x.iter().map(|&v| leaky_relu_scalar(v, alpha)).collect())
}

pub fn tanh(x: &[f64]) -> Vector {
    x.iter().copied().map(tanh_scalar).collect()
}

/// Softmax with max subtraction. An empty input yields an empty output.
pub fn softmax(x: &[f64]) -> Vector {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Applies `kind` to `x` with its true semantics.
pub fn apply(kind: Activation, x: &[f64]) -> Vector {
    match kind {
        Activation::Sigmoid => sigmoid(x),
        Activation::Relu => relu(x),
        Activation::LeakyRelu { alpha } => x.iter().map(|&v| leaky_relu_scalar(v, alpha)).collect(),
        Activation::Tanh => tanh(x),
        Activation::Softmax => softmax(x),
    }
}
