//! Finite-difference verification of the analytic distance gradient.
//!
//! Each instance draws standard-normal `X` (`J × L`) and `Z` (`B × L`) and
//! compares [`metric::distance_gradient`] with central differences of
//! [`metric::squared_distance`]. The error of an instance is
//! `max_i |g_i - d_i| / max(max_i |g_i|, max_i |d_i|)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cloud::PointCloud;
use crate::error::Result;
use crate::metric::{self, KernelParam};

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckSettings {
    pub instances: usize,
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub smoothings: Vec<f64>,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        Self {
            instances: 200,
            seed: 0,
            step: 1e-5,
            tolerance: 1e-6,
            dims: vec![1, 2, 5],
            sizes: vec![1, 3, 7],
            smoothings: vec![1e-6, 1e-2],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub dim: usize,
    pub num_points: usize,
    pub batch_size: usize,
    pub instances: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub settings: GradCheckSettings,
    pub cells: Vec<CellResult>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Central differences of `squared_distance` in every coordinate of `x`.
pub fn finite_difference_gradient(
    x: &PointCloud,
    z: &PointCloud,
    kernel: &KernelParam,
    h: f64,
) -> Result<Vec<f64>> {
    let base = x.as_slice().to_vec();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += h;
        minus[i] -= h;
        let fp = metric::squared_distance(&x.with_data(plus)?, z, kernel)?;
        let fm = metric::squared_distance(&x.with_data(minus)?, z, kernel)?;
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = inf(analytic).max(inf(numeric));
    if scale == 0.0 {
        return 0.0;
    }
    analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()))
        / scale
}

fn gaussian_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Result<PointCloud> {
    PointCloud::new(
        n,
        dim,
        (0..n * dim).map(|_| StandardNormal.sample(rng)).collect(),
    )
}

pub fn run(settings: &GradCheckSettings) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut cells: Vec<CellResult> = Vec::new();
    for &dim in &settings.dims {
        for &j in &settings.sizes {
            for &b in &settings.sizes {
                cells.push(CellResult {
                    dim,
                    num_points: j,
                    batch_size: b,
                    instances: 0,
                    max_rel_error: 0.0,
                });
            }
        }
    }
    let combos = cells.len() * settings.smoothings.len();
    for i in 0..settings.instances {
        let cell = &mut cells[(i % combos) / settings.smoothings.len()];
        let kernel = KernelParam::new(settings.smoothings[i % settings.smoothings.len()])?;
        let x = gaussian_cloud(&mut rng, cell.num_points, cell.dim)?;
        let z = gaussian_cloud(&mut rng, cell.batch_size, cell.dim)?;
        let analytic = metric::distance_gradient(&x, &z, &kernel)?;
        let numeric = finite_difference_gradient(&x, &z, &kernel, settings.step)?;
        let err = relative_error(&analytic, &numeric);
        cell.instances += 1;
        cell.max_rel_error = cell.max_rel_error.max(err);
    }
    let max_rel_error = cells.iter().fold(0.0f64, |m, c| m.max(c.max_rel_error));
    Ok(GradCheckReport {
        settings: settings.clone(),
        cells,
        max_rel_error,
        passed: max_rel_error < settings.tolerance,
    })
}

impl GradCheckReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>3} {:>3} {:>3} {:>5} {:>14}\n",
            "L", "J", "B", "n", "max_rel_err"
        );
        for c in &self.cells {
            s.push_str(&format!(
                "{:>3} {:>3} {:>3} {:>5} {:>14.3e}\n",
                c.dim, c.num_points, c.batch_size, c.instances, c.max_rel_error
            ));
        }
        s.push_str(&format!(
            "max relative error {:.3e} (tolerance {:.0e}): {}\n",
            self.max_rel_error,
            self.settings.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        ));
        s
    }
}
