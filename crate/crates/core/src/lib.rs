//! Measure compression: represent a target probability measure by `J`
//! points chosen jointly to minimize a smoothed energy distance, instead of
//! drawing them independently.
//!
//! The pieces:
//! - [`metric`]: the kernel `k(x) = sqrt(|x|² + a²) - a`, the squared
//!   distance between two empirical measures, and its gradient.
//! - [`targets`]: measures to compress (standard Gaussian, isotropic Gaussian
//!   mixture, empirical sample).
//! - [`optimizer`]: Adam, SGD, momentum and Nesterov updates.
//! - [`compressor`]: the stochastic compression loop.
//! - [`diversity`]: compressed sets versus i.i.d. sets of the same size.
//! - [`cli`]: the `mcompress` command line.

pub mod cli;
pub mod cloud;
pub mod compressor;
pub mod diversity;
pub mod error;
pub mod exec;
pub mod gradcheck;
pub mod io;
pub mod metric;
pub mod optimizer;
pub mod streams;
pub mod targets;

pub use cloud::PointCloud;
pub use compressor::{compress, compress_with, loss_estimate, CompressConfig, RunReport};
pub use diversity::{compare_iid, min_pairwise_distance, repetition_count, ComparisonReport};
pub use error::{Error, Result};
pub use exec::Execution;
pub use metric::{KernelParam, ZeroDisplacement};
pub use optimizer::{Method, OptimizerConfig, OptimizerState};
pub use targets::{Mixture, TargetSpec};
