//! The compression loop: start from `J` i.i.d. draws of the target, then for
//! a fixed number of iterations draw a fresh batch, take the gradient of the
//! squared distance between the current points and the batch, and apply one
//! optimizer step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metric::{self, KernelParam};
use crate::optimizer::{self, OptimizerConfig, OptimizerState};
use crate::streams::{stream, Stream};
use crate::targets::TargetSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Lower bound on the size of the reference batch behind
/// [`RunReport::final_loss_estimate`].
pub const FINAL_ESTIMATE_MIN_REF: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressConfig {
    /// Number of representative points.
    #[serde(rename = "J")]
    pub num_points: usize,
    /// Dimension of the space.
    #[serde(rename = "L")]
    pub dim: usize,
    /// Fresh samples drawn per iteration.
    #[serde(rename = "B")]
    pub batch_size: usize,
    pub max_iters: usize,
    pub kernel: KernelParam,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub record_loss_every: usize,
}

impl Default for CompressConfig {
    fn default() -> Self {
        Self {
            num_points: 10,
            dim: 2,
            batch_size: 1000,
            max_iters: 2000,
            kernel: KernelParam::default(),
            optimizer: OptimizerConfig::default(),
            seed: 0,
            record_loss_every: 10,
        }
    }
}

impl CompressConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("J", self.num_points),
            ("L", self.dim),
            ("B", self.batch_size),
            ("max_iters", self.max_iters),
            ("record_loss_every", self.record_loss_every),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        self.optimizer.validate()
    }

    pub fn validate_for(&self, target: &TargetSpec) -> Result<()> {
        self.validate()?;
        target.ensure_valid()?;
        if target.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "config L={}, target L={}",
                self.dim,
                target.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    /// Cross and point-self terms on that iteration's batch, before the
    /// update. The batch-self term is not included.
    pub partial_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: CompressConfig,
    pub seed: u64,
    pub target: TargetSpec,
    pub loss_history: Vec<LossRecord>,
    pub final_points: PointCloud,
    /// Full three-term squared distance to a fresh reference batch.
    pub final_loss_estimate: f64,
    pub final_loss_ref_size: usize,
    pub wall_time_seconds: f64,
}

/// The starting points: `J` draws from the target's initialization stream.
pub fn initial_points(target: &TargetSpec, config: &CompressConfig) -> Result<PointCloud> {
    config.validate_for(target)?;
    target.sample(config.num_points, &mut stream(config.seed, Stream::Init))
}

pub fn compress(target: &TargetSpec, config: &CompressConfig) -> Result<RunReport> {
    compress_with(target, config, &Execution::sequential())
}

/// [`compress`] with the pairwise sums evaluated under `exec`. The result
/// does not depend on `exec`.
pub fn compress_with(
    target: &TargetSpec,
    config: &CompressConfig,
    exec: &Execution,
) -> Result<RunReport> {
    let started = Instant::now();
    let init = initial_points(target, config)?;
    let (rows, cols) = (init.len(), init.dim());
    let mut x = init.into_vec();
    let mut state = OptimizerState::new(rows, cols);
    let mut batches = stream(config.seed, Stream::Batches);
    let mut history = Vec::with_capacity(config.max_iters / config.record_loss_every + 1);

    for iteration in 1..=config.max_iters {
        let batch = target.sample(config.batch_size, &mut batches)?;
        let current = PointCloud::new(rows, cols, x)?;
        let lg = metric::loss_and_gradient(&current, &batch, &config.kernel, exec)?;
        if iteration % config.record_loss_every == 0 || iteration == config.max_iters {
            history.push(LossRecord {
                iteration,
                partial_loss: lg.partial_loss,
            });
        }
        x = current.into_vec();
        optimizer::step(&mut x, &lg.gradient, &mut state, &config.optimizer)?;
    }

    let final_points = PointCloud::new(rows, cols, x)?;
    let ref_size = config.batch_size.max(FINAL_ESTIMATE_MIN_REF);
    let final_loss_estimate = loss_estimate_with(
        &final_points,
        target,
        ref_size,
        &config.kernel,
        config.seed,
        exec,
    )?;

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        seed: config.seed,
        target: target.clone(),
        loss_history: history,
        final_points,
        final_loss_estimate,
        final_loss_ref_size: ref_size,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Squared distance (all three terms) between `x` and `n_ref` fresh draws
/// from the evaluation stream of `seed`.
pub fn loss_estimate(
    x: &PointCloud,
    target: &TargetSpec,
    n_ref: usize,
    kernel: &KernelParam,
    seed: u64,
) -> Result<f64> {
    loss_estimate_with(x, target, n_ref, kernel, seed, &Execution::sequential())
}

pub fn loss_estimate_with(
    x: &PointCloud,
    target: &TargetSpec,
    n_ref: usize,
    kernel: &KernelParam,
    seed: u64,
    exec: &Execution,
) -> Result<f64> {
    if x.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "points L={}, target L={}",
            x.dim(),
            target.dim()
        )));
    }
    let reference = target.sample(n_ref, &mut stream(seed, Stream::Evaluation))?;
    metric::squared_distance_with(x, &reference, kernel, exec)
}
