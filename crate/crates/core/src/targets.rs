//! Target measures that can be sampled i.i.d.
//!
//! Gaussian coordinates come from `rand_distr::StandardNormal` (the ziggurat
//! method of rand_distr 0.4); changing that dependency changes every seeded
//! stream.

use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io;

/// Tolerance on `Σ weights = 1` for mixtures.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Isotropic Gaussian mixture `Σ_c w_c N(mean_c, scale_c² I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    StandardGaussian {
        dim: usize,
    },
    GaussianMixture(Mixture),
    /// Uniform over the stored rows, always sampled with replacement.
    Empirical {
        samples: PointCloud,
    },
}

impl TargetSpec {
    pub fn standard_gaussian(dim: usize) -> Self {
        TargetSpec::StandardGaussian { dim }
    }

    pub fn empirical(samples: PointCloud) -> Self {
        TargetSpec::Empirical { samples }
    }

    /// Dimension of the target, `0` when it cannot be determined.
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::StandardGaussian { dim } => *dim,
            TargetSpec::GaussianMixture(m) => m.means.first().map_or(0, Vec::len),
            TargetSpec::Empirical { samples } => samples.dim(),
        }
    }

    /// Every invariant violation; empty iff the target is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            TargetSpec::StandardGaussian { dim } => {
                if *dim == 0 {
                    out.push("gaussian dim must be >= 1".to_string());
                }
            }
            TargetSpec::GaussianMixture(m) => m.collect_violations(&mut out),
            // PointCloud already guarantees M >= 1 and finite rows.
            TargetSpec::Empirical { .. } => {}
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidTarget(violations))
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PointCloud> {
        self.ensure_valid()?;
        if n == 0 {
            return Err(Error::invalid("sample size must be >= 1"));
        }
        let dim = self.dim();
        let mut data = Vec::with_capacity(n * dim);
        match self {
            TargetSpec::StandardGaussian { .. } => {
                data.extend((0..n * dim).map(|_| -> f64 { StandardNormal.sample(rng) }));
            }
            TargetSpec::GaussianMixture(m) => {
                let pick = WeightedIndex::new(&m.weights)
                    .map_err(|e| Error::InvalidTarget(vec![format!("mixture weights: {e}")]))?;
                for _ in 0..n {
                    let c = pick.sample(rng);
                    let scale = m.scales[c];
                    for &mu in &m.means[c] {
                        let e: f64 = StandardNormal.sample(rng);
                        data.push(mu + scale * e);
                    }
                }
            }
            TargetSpec::Empirical { samples } => {
                for _ in 0..n {
                    data.extend_from_slice(samples.row(rng.gen_range(0..samples.len())));
                }
            }
        }
        PointCloud::new(n, dim, data)
    }
}

impl Mixture {
    fn collect_violations(&self, out: &mut Vec<String>) {
        let k = self.weights.len();
        if k == 0 {
            out.push("mixture needs at least one component".to_string());
        }
        if self.means.len() != k || self.scales.len() != k {
            out.push(format!(
                "component count mismatch: {k} weights, {} means, {} scales",
                self.means.len(),
                self.scales.len()
            ));
        }
        for (i, w) in self.weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                out.push(format!(
                    "weight {i} = {w} is not a non-negative finite number"
                ));
            }
        }
        let sum: f64 = self.weights.iter().sum();
        if k > 0 && ((sum - 1.0).abs() > WEIGHT_SUM_TOL || sum.is_nan()) {
            out.push(format!("weights sum {sum} ≠ 1"));
        }
        for (i, s) in self.scales.iter().enumerate() {
            if !s.is_finite() || *s <= 0.0 {
                out.push(format!("scale {i} = {s} must be positive and finite"));
            }
        }
        let dim = self.means.first().map_or(0, Vec::len);
        if !self.means.is_empty() && dim == 0 {
            out.push("mixture means must have dim >= 1".to_string());
        }
        for (i, mean) in self.means.iter().enumerate() {
            if mean.len() != dim {
                out.push(format!(
                    "dimension violation: mean {i} has dim {}, expected {dim}",
                    mean.len()
                ));
            }
            if mean.iter().any(|v| !v.is_finite()) {
                out.push(format!("mean {i} has non-finite coordinates"));
            }
        }
    }
}

/// Reads an empirical target from the points CSV format.
pub fn load_empirical(path: &Path, expected_dim: Option<usize>) -> Result<TargetSpec> {
    let table = io::read_csv_table(path)?;
    if table.rows == 0 {
        return Err(Error::InvalidTarget(vec![
            "empirical target needs at least 1 sample".to_string(),
        ]));
    }
    if let Some(want) = expected_dim {
        if want != table.dim {
            return Err(Error::DimensionMismatch(format!(
                "empirical file L={}, expected L={want}",
                table.dim
            )));
        }
    }
    Ok(TargetSpec::Empirical {
        samples: table.into_cloud()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{stream, Stream};

    fn mixture(weights: Vec<f64>, means: Vec<Vec<f64>>, scales: Vec<f64>) -> TargetSpec {
        TargetSpec::GaussianMixture(Mixture {
            weights,
            means,
            scales,
        })
    }

    #[test]
    fn validate_examples() {
        assert!(TargetSpec::standard_gaussian(2).validate().is_empty());
        assert!(!TargetSpec::standard_gaussian(0).validate().is_empty());

        let bad = mixture(
            vec![0.5, 0.6],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![1.0, 1.0],
        );
        let v = bad.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("weights sum 1.1"), "{v:?}");

        let bad = mixture(
            vec![0.5, 0.5],
            vec![vec![0.0, 0.0], vec![1.0, 1.0, 1.0]],
            vec![1.0, 1.0],
        );
        let v = bad.validate();
        assert!(v.iter().any(|m| m.contains("dimension violation")), "{v:?}");

        let bad = mixture(vec![-0.5, 1.5], vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]);
        assert_eq!(bad.validate().len(), 2);
    }

    #[test]
    fn invalid_target_refuses_to_sample() {
        let bad = mixture(vec![0.5, 0.6], vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]);
        let mut rng = stream(1, Stream::Init);
        assert!(matches!(
            bad.sample(3, &mut rng),
            Err(Error::InvalidTarget(_))
        ));
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = stream(2024, Stream::Init);
        let s = TargetSpec::standard_gaussian(2)
            .sample(100_000, &mut rng)
            .unwrap();
        for c in 0..2 {
            let col: Vec<f64> = s.rows().map(|r| r[c]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(mean.abs() < 0.02, "mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "var {var}");
        }
    }

    #[test]
    fn single_atom_empirical() {
        let atom = PointCloud::from_rows(&[[1.0, 1.0]]).unwrap();
        let mut rng = stream(5, Stream::Batches);
        let s = TargetSpec::empirical(atom).sample(7, &mut rng).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.rows().all(|r| r == [1.0, 1.0]));
    }

    #[test]
    fn empirical_hits_every_atom() {
        let atoms = PointCloud::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let mut rng = stream(11, Stream::Batches);
        let s = TargetSpec::empirical(atoms).sample(3000, &mut rng).unwrap();
        for atom in 0..3 {
            let freq = s.rows().filter(|r| r[0] == atom as f64).count() as f64 / 3000.0;
            assert!((0.28..=0.39).contains(&freq), "atom {atom}: {freq}");
        }
    }

    #[test]
    fn mixture_components_are_used() {
        let t = mixture(
            vec![0.25, 0.75],
            vec![vec![-10.0], vec![10.0]],
            vec![0.1, 0.1],
        );
        let mut rng = stream(3, Stream::Init);
        let s = t.sample(4000, &mut rng).unwrap();
        let left = s.rows().filter(|r| r[0] < 0.0).count() as f64 / 4000.0;
        assert!((left - 0.25).abs() < 0.035, "{left}");
    }

    #[test]
    fn same_seed_same_sample() {
        let t = TargetSpec::standard_gaussian(3);
        let a = t.sample(50, &mut stream(9, Stream::Init)).unwrap();
        let b = t.sample(50, &mut stream(9, Stream::Init)).unwrap();
        let c = t.sample(50, &mut stream(9, Stream::Batches)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn target_json_shape() {
        let t: TargetSpec =
            serde_json::from_str(r#"{"kind":"standard_gaussian","dim":2}"#).unwrap();
        assert_eq!(t, TargetSpec::standard_gaussian(2));
    }
}
