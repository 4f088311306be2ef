//! The smoothed energy kernel `k(x) = sqrt(|x|^2 + a^2) - a`, the squared
//! kernel distance between two uniform empirical measures, and its exact
//! gradient in the first point set.
//!
//! For `X` with `J` rows and `Z` with `B` rows:
//!
//! ```text
//! d²(X, Z) = Σ_{j,b} k(X_j - z_b) / (J B)
//!          - Σ_{j,j'} k(X_j - X_j') / (2 J²)
//!          - Σ_{b,b'} k(z_b - z_b') / (2 B²)
//! ```
//!
//! Diagonal terms are part of both self sums; they vanish because `k(0) = 0`.
//!
//! Summation order is fixed: each row's inner sum runs sequentially, then
//! row sums are folded in row order. Self sums visit each unordered pair once
//! and double the total. Parallel execution only distributes whole rows, so
//! results are bit-identical in every [`Execution`] mode.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Smoothing length used by default.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

/// What the gradient does at a zero displacement when `a = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDisplacement {
    /// Fail with [`Error::SingularGradient`].
    #[default]
    Error,
    /// Use the subgradient `0`.
    Subgradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct KernelParam {
    a: f64,
    zero_displacement: ZeroDisplacement,
}

#[derive(Serialize, Deserialize)]
struct RawKernel {
    a: f64,
    #[serde(default)]
    zero_displacement: ZeroDisplacement,
}

impl TryFrom<RawKernel> for KernelParam {
    type Error = Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        Ok(KernelParam::new(raw.a)?.with_zero_displacement(raw.zero_displacement))
    }
}

impl From<KernelParam> for RawKernel {
    fn from(k: KernelParam) -> Self {
        RawKernel {
            a: k.a,
            zero_displacement: k.zero_displacement,
        }
    }
}

impl Default for KernelParam {
    fn default() -> Self {
        Self {
            a: DEFAULT_SMOOTHING,
            zero_displacement: ZeroDisplacement::Error,
        }
    }
}

impl KernelParam {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::invalid(format!(
                "kernel smoothing a must be finite and >= 0, got {a}"
            )));
        }
        Ok(Self {
            a,
            zero_displacement: ZeroDisplacement::Error,
        })
    }

    pub fn with_zero_displacement(mut self, policy: ZeroDisplacement) -> Self {
        self.zero_displacement = policy;
        self
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn zero_displacement(&self) -> ZeroDisplacement {
        self.zero_displacement
    }

    /// `k` as a function of the squared norm. Written as
    /// `r² / (sqrt(r² + a²) + a)` to avoid cancellation when `r << a`.
    #[inline]
    pub fn value_sq(&self, r2: f64) -> f64 {
        if r2 == 0.0 {
            return 0.0;
        }
        r2 / ((r2 + self.a * self.a).sqrt() + self.a)
    }

    /// Scale `s` such that `∇k(x) = s·x`, or `None` when the gradient is
    /// singular and the policy says to fail.
    #[inline]
    fn grad_scale_sq(&self, r2: f64) -> Option<f64> {
        let denom = (r2 + self.a * self.a).sqrt();
        if denom > 0.0 {
            Some(1.0 / denom)
        } else {
            match self.zero_displacement {
                ZeroDisplacement::Error => None,
                ZeroDisplacement::Subgradient => Some(0.0),
            }
        }
    }
}

#[inline]
fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("kernel argument has non-finite coordinates"))
    }
}

pub fn kernel_value(x: &[f64], kernel: &KernelParam) -> Result<f64> {
    check_finite(x)?;
    Ok(kernel.value_sq(x.iter().map(|v| v * v).sum()))
}

/// `x / sqrt(|x|^2 + a^2)`.
pub fn kernel_grad(x: &[f64], kernel: &KernelParam) -> Result<Vec<f64>> {
    check_finite(x)?;
    let scale = kernel
        .grad_scale_sq(x.iter().map(|v| v * v).sum())
        .ok_or_else(|| Error::SingularGradient {
            context: "kernel_grad at the origin".into(),
        })?;
    Ok(x.iter().map(|v| v * scale).collect())
}

/// `Σ_{j,b} k(X_j - z_b)`.
pub fn cross_sum(
    x: &PointCloud,
    z: &PointCloud,
    kernel: &KernelParam,
    exec: &Execution,
) -> Result<f64> {
    x.ensure_same_dim(z)?;
    let rows = exec.map(x.len(), |j| {
        let xj = x.row(j);
        z.rows()
            .map(|zb| kernel.value_sq(sq_dist(xj, zb)))
            .sum::<f64>()
    });
    Ok(rows.into_iter().sum())
}

/// `Σ_{j,j'} k(X_j - X_j')`, diagonal included (it is zero).
pub fn self_sum(x: &PointCloud, kernel: &KernelParam, exec: &Execution) -> f64 {
    let rows = exec.map(x.len(), |j| {
        let xj = x.row(j);
        (j + 1..x.len())
            .map(|i| kernel.value_sq(sq_dist(xj, x.row(i))))
            .sum::<f64>()
    });
    2.0 * rows.into_iter().sum::<f64>()
}

pub fn squared_distance(x: &PointCloud, z: &PointCloud, kernel: &KernelParam) -> Result<f64> {
    squared_distance_with(x, z, kernel, &Execution::sequential())
}

pub fn squared_distance_with(
    x: &PointCloud,
    z: &PointCloud,
    kernel: &KernelParam,
    exec: &Execution,
) -> Result<f64> {
    let cross = cross_sum(x, z, kernel, exec)?;
    let (j, b) = (x.len() as f64, z.len() as f64);
    Ok(cross / (j * b)
        - self_sum(x, kernel, exec) / (2.0 * j * j)
        - self_sum(z, kernel, exec) / (2.0 * b * b))
}

/// Loss and gradient for one optimization step.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    /// The cross and X-self terms of `d²(X, Z)`; the Z-self term is left out
    /// because it does not depend on `X`.
    pub partial_loss: f64,
    /// Row-major, same shape as `X`.
    pub gradient: Vec<f64>,
}

struct RowTerms {
    cross: f64,
    own: f64,
    grad_cross: Vec<f64>,
    grad_own: Vec<f64>,
}

/// Partial loss and exact gradient with respect to `X`.
///
/// Row `j` of the gradient is
/// `Σ_b ∇k(X_j - z_b) / (J B) - Σ_{j'} ∇k(X_j - X_j') / J²`.
/// The diagonal `j' = j` term is constant in `X` and is skipped, so a
/// singular gradient is only reported for genuinely coincident points.
pub fn loss_and_gradient(
    x: &PointCloud,
    z: &PointCloud,
    kernel: &KernelParam,
    exec: &Execution,
) -> Result<LossGradient> {
    x.ensure_same_dim(z)?;
    let dim = x.dim();
    let rows = exec.map(x.len(), |j| -> Result<RowTerms> {
        let xj = x.row(j);
        let mut t = RowTerms {
            cross: 0.0,
            own: 0.0,
            grad_cross: vec![0.0; dim],
            grad_own: vec![0.0; dim],
        };
        for (b, zb) in z.rows().enumerate() {
            let r2 = sq_dist(xj, zb);
            t.cross += kernel.value_sq(r2);
            let s = kernel
                .grad_scale_sq(r2)
                .ok_or_else(|| Error::SingularGradient {
                    context: format!("X[{j}] coincides with Z[{b}]"),
                })?;
            for ((g, p), q) in t.grad_cross.iter_mut().zip(xj).zip(zb) {
                *g += s * (p - q);
            }
        }
        for (i, xi) in x.rows().enumerate() {
            if i == j {
                continue;
            }
            let r2 = sq_dist(xj, xi);
            t.own += kernel.value_sq(r2);
            let s = kernel
                .grad_scale_sq(r2)
                .ok_or_else(|| Error::SingularGradient {
                    context: format!("X[{j}] coincides with X[{i}]"),
                })?;
            for ((g, p), q) in t.grad_own.iter_mut().zip(xj).zip(xi) {
                *g += s * (p - q);
            }
        }
        Ok(t)
    });

    let (jn, bn) = (x.len() as f64, z.len() as f64);
    let cross_w = 1.0 / (jn * bn);
    let own_w = 1.0 / (jn * jn);
    let mut cross = 0.0;
    let mut own = 0.0;
    let mut gradient = Vec::with_capacity(x.len() * dim);
    for row in rows {
        let row = row?;
        cross += row.cross;
        own += row.own;
        gradient.extend(
            row.grad_cross
                .iter()
                .zip(&row.grad_own)
                .map(|(c, o)| cross_w * c - own_w * o),
        );
    }
    Ok(LossGradient {
        partial_loss: cross * cross_w - own * own_w / 2.0,
        gradient,
    })
}

pub fn distance_gradient(x: &PointCloud, z: &PointCloud, kernel: &KernelParam) -> Result<Vec<f64>> {
    loss_and_gradient(x, z, kernel, &Execution::sequential()).map(|lg| lg.gradient)
}
