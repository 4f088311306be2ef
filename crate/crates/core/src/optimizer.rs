//! First-order update rules for the point cloud.
//!
//! All four methods work entrywise on a flat row-major parameter vector:
//!
//! - Adam: `m ← β₁m + (1-β₁)g`, `v ← β₂v + (1-β₂)g²`,
//!   `x ← x - lr·m̂/(sqrt(v̂) + ε)` with bias-corrected `m̂`, `v̂`.
//! - SGD: `x ← x - lr·g`.
//! - Momentum: `v ← μv + g`, `x ← x - lr·v`.
//! - Nesterov: `v ← μv + g`, `x ← x - lr·(g + μv)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Adam,
    Sgd,
    Momentum,
    Nesterov,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(Method::Adam),
            "sgd" => Ok(Method::Sgd),
            "momentum" => Ok(Method::Momentum),
            "nesterov" => Ok(Method::Nesterov),
            other => Err(Error::invalid(format!(
                "unknown optimizer {other:?} (adam, sgd, momentum, nesterov)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    /// Adam only.
    pub beta1: f64,
    /// Adam only.
    pub beta2: f64,
    /// Adam only.
    pub epsilon: f64,
    /// Momentum and Nesterov only.
    pub momentum: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Adam,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum: 0.9,
        }
    }
}

impl OptimizerConfig {
    pub fn with_method(method: Method, learning_rate: f64) -> Self {
        Self {
            method,
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(Error::invalid(format!(
                "beta1, beta2 must lie in [0, 1), got {}, {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !unit(self.momentum) {
            return Err(Error::invalid(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Moment buffers for one optimization variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    /// First moment (Adam).
    pub m: Vec<f64>,
    /// Second moment (Adam) or velocity (momentum, Nesterov).
    pub v: Vec<f64>,
    /// Steps taken.
    pub t: u64,
}

impl OptimizerState {
    /// Zeroed state for a `rows × cols` variable. Independent of the config.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m: vec![0.0; rows * cols],
            v: vec![0.0; rows * cols],
            t: 0,
        }
    }
}

/// One update of `x` in place.
pub fn step(
    x: &mut [f64],
    grad: &[f64],
    state: &mut OptimizerState,
    config: &OptimizerConfig,
) -> Result<()> {
    if x.len() != grad.len() || x.len() != state.m.len() || x.len() != state.v.len() {
        return Err(Error::DimensionMismatch(format!(
            "optimizer shapes differ: x {}, grad {}, state {}",
            x.len(),
            grad.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite gradient entry {} at {i}",
            grad[i]
        )));
    }
    state.t += 1;
    let lr = config.learning_rate;
    match config.method {
        Method::Adam => {
            let (b1, b2) = (config.beta1, config.beta2);
            let t = i32::try_from(state.t).unwrap_or(i32::MAX);
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            for (((xi, &g), m), v) in x.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *xi -= lr * (*m / c1) / ((*v / c2).sqrt() + config.epsilon);
            }
        }
        Method::Sgd => {
            for (xi, &g) in x.iter_mut().zip(grad) {
                *xi -= lr * g;
            }
        }
        Method::Momentum => {
            let mu = config.momentum;
            for ((xi, &g), v) in x.iter_mut().zip(grad).zip(&mut state.v) {
                *v = mu * *v + g;
                *xi -= lr * *v;
            }
        }
        Method::Nesterov => {
            let mu = config.momentum;
            for ((xi, &g), v) in x.iter_mut().zip(grad).zip(&mut state.v) {
                *v = mu * *v + g;
                *xi -= lr * (g + mu * *v);
            }
        }
    }
    Ok(())
}
