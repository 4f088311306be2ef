//! Diversity of compressed point sets compared with i.i.d. sets of the same
//! size.
//!
//! For each seed, one i.i.d. set and one compressed set are scored against
//! the same fresh reference sample. The reference-self term of the squared
//! distance is shared by both arms; for references larger than
//! [`REFERENCE_SELF_MAX_POINTS`] it is estimated from the leading block of
//! the reference (see [`reference_self_term`]).

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::compressor::{compress, CompressConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metric::{self, KernelParam};
use crate::streams::{stream, Stream};
use crate::targets::TargetSpec;

/// Default distance below which two points count as a repetition.
pub const DEFAULT_REPETITION_THRESHOLD: f64 = 0.5;

/// Largest reference whose self term is summed over all pairs.
pub const REFERENCE_SELF_MAX_POINTS: usize = 10_000;

fn pair_distances(x: &PointCloud) -> Result<impl Iterator<Item = f64> + '_> {
    if x.len() < 2 {
        return Err(Error::invalid(format!(
            "pairwise statistics need at least 2 points, got {}",
            x.len()
        )));
    }
    Ok((0..x.len()).flat_map(move |i| {
        (i + 1..x.len()).map(move |j| {
            x.row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    }))
}

/// `min_{j < j'} |X_j - X_j'|`.
pub fn min_pairwise_distance(x: &PointCloud) -> Result<f64> {
    Ok(pair_distances(x)?.fold(f64::INFINITY, f64::min))
}

/// Number of unordered pairs closer than `threshold`.
pub fn repetition_count(x: &PointCloud, threshold: f64) -> Result<usize> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    Ok(pair_distances(x)?.filter(|d| *d < threshold).count())
}

/// `Σ_{b,b'} k(z_b - z_b') / (2 B²)` for the reference, and the number of
/// leading reference points it was computed from.
///
/// Up to [`REFERENCE_SELF_MAX_POINTS`] points the sum is exact. Beyond that
/// the off-diagonal mean over the first `m` points is scaled by
/// `(1 - 1/B)`, which has the same expectation as the exact value.
pub fn reference_self_term(
    reference: &PointCloud,
    kernel: &KernelParam,
    exec: &Execution,
) -> Result<(f64, usize)> {
    let n = reference.len();
    if n <= REFERENCE_SELF_MAX_POINTS {
        let nf = n as f64;
        return Ok((
            metric::self_sum(reference, kernel, exec) / (2.0 * nf * nf),
            n,
        ));
    }
    let m = REFERENCE_SELF_MAX_POINTS;
    let head = PointCloud::new(
        m,
        reference.dim(),
        reference.as_slice()[..m * reference.dim()].to_vec(),
    )?;
    let mf = m as f64;
    let off_diag_mean = metric::self_sum(&head, kernel, exec) / (mf * (mf - 1.0));
    Ok(((1.0 - 1.0 / n as f64) * off_diag_mean / 2.0, m))
}

/// Squared distance from `x` to `reference` given the precomputed
/// reference-self term.
pub fn energy_to_reference(
    x: &PointCloud,
    reference: &PointCloud,
    reference_self: f64,
    kernel: &KernelParam,
    exec: &Execution,
) -> Result<f64> {
    let (j, b) = (x.len() as f64, reference.len() as f64);
    let cross = metric::cross_sum(x, reference, kernel, exec)? / (j * b);
    let own = metric::self_sum(x, kernel, exec) / (2.0 * j * j);
    Ok(cross - own - reference_self)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub iid_min_pairwise: f64,
    pub compressed_min_pairwise: f64,
    pub iid_energy_to_ref: f64,
    pub compressed_energy_to_ref: f64,
    pub iid_repetitions: usize,
    pub compressed_repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

impl MetricSummary {
    /// Quantiles by linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            if sorted.is_empty() {
                return f64::NAN;
            }
            let pos = p * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Self {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p10: q(0.1),
            p50: q(0.5),
            p90: q(0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub iid_min_pairwise: MetricSummary,
    pub compressed_min_pairwise: MetricSummary,
    pub iid_energy_to_ref: MetricSummary,
    pub compressed_energy_to_ref: MetricSummary,
    pub iid_repetitions: MetricSummary,
    pub compressed_repetitions: MetricSummary,
}

/// Fraction of seeds where the compressed set strictly beats the i.i.d. set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinRates {
    /// Larger minimum pairwise distance.
    pub min_pairwise: f64,
    /// Smaller squared distance to the reference.
    pub energy_to_ref: f64,
    /// Fewer repetitions.
    pub repetitions: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub config: CompressConfig,
    pub target: TargetSpec,
    pub n_seeds: usize,
    pub ref_size: usize,
    pub threshold: f64,
    /// Reference points entering the reference-self term.
    pub reference_self_points: usize,
    pub records: Vec<SeedRecord>,
    pub summary: Summary,
    pub win_rates: WinRates,
}

impl ComparisonReport {
    fn assemble(
        config: &CompressConfig,
        target: &TargetSpec,
        ref_size: usize,
        threshold: f64,
        reference_self_points: usize,
        records: Vec<SeedRecord>,
    ) -> Self {
        let col = |f: &dyn Fn(&SeedRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
        let summary = Summary {
            iid_min_pairwise: MetricSummary::of(&col(&|r| r.iid_min_pairwise)),
            compressed_min_pairwise: MetricSummary::of(&col(&|r| r.compressed_min_pairwise)),
            iid_energy_to_ref: MetricSummary::of(&col(&|r| r.iid_energy_to_ref)),
            compressed_energy_to_ref: MetricSummary::of(&col(&|r| r.compressed_energy_to_ref)),
            iid_repetitions: MetricSummary::of(&col(&|r| r.iid_repetitions as f64)),
            compressed_repetitions: MetricSummary::of(&col(&|r| r.compressed_repetitions as f64)),
        };
        let rate = |win: &dyn Fn(&SeedRecord) -> bool| {
            records.iter().filter(|r| win(r)).count() as f64 / records.len() as f64
        };
        let win_rates = WinRates {
            min_pairwise: rate(&|r| r.compressed_min_pairwise > r.iid_min_pairwise),
            energy_to_ref: rate(&|r| r.compressed_energy_to_ref < r.iid_energy_to_ref),
            repetitions: rate(&|r| r.compressed_repetitions < r.iid_repetitions),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            target: target.clone(),
            n_seeds: records.len(),
            ref_size,
            threshold,
            reference_self_points,
            records,
            summary,
            win_rates,
        }
    }

    pub fn write_seed_csv(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        let mut write = || -> std::io::Result<()> {
            writeln!(
                out,
                "seed,iid_min_pairwise,compressed_min_pairwise,iid_energy_to_ref,\
                 compressed_energy_to_ref,iid_repetitions,compressed_repetitions"
            )?;
            for r in &self.records {
                writeln!(
                    out,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                    r.seed,
                    r.iid_min_pairwise,
                    r.compressed_min_pairwise,
                    r.iid_energy_to_ref,
                    r.compressed_energy_to_ref,
                    r.iid_repetitions,
                    r.compressed_repetitions
                )?;
            }
            out.flush()
        };
        write().map_err(io_err)
    }
}

pub fn compare_iid(
    target: &TargetSpec,
    config: &CompressConfig,
    n_seeds: usize,
    ref_size: usize,
    threshold: f64,
) -> Result<ComparisonReport> {
    compare_iid_with(
        target,
        config,
        n_seeds,
        ref_size,
        threshold,
        &Execution::sequential(),
    )
}

/// Seed `s` of the sweep uses run seed `config.seed + s` (wrapping). Seeds
/// are evaluated under `exec`; the report is folded in seed order and does
/// not depend on `exec`.
pub fn compare_iid_with(
    target: &TargetSpec,
    config: &CompressConfig,
    n_seeds: usize,
    ref_size: usize,
    threshold: f64,
    exec: &Execution,
) -> Result<ComparisonReport> {
    config.validate_for(target)?;
    if n_seeds == 0 || ref_size == 0 {
        return Err(Error::invalid("n_seeds and ref_size must be >= 1"));
    }
    if config.num_points < 2 {
        return Err(Error::invalid("diversity comparison needs J >= 2"));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {threshold}"
        )));
    }

    let inner = Execution::sequential();
    let per_seed = exec.map(n_seeds, |s| -> Result<(SeedRecord, usize)> {
        let seed = config.seed.wrapping_add(s as u64);
        let iid = target.sample(config.num_points, &mut stream(seed, Stream::Baseline))?;
        let run_config = CompressConfig {
            seed,
            ..config.clone()
        };
        let compressed = compress(target, &run_config)?.final_points;
        let reference = target.sample(ref_size, &mut stream(seed, Stream::Reference))?;
        let (ref_self, ref_points) = reference_self_term(&reference, &config.kernel, &inner)?;
        let record = SeedRecord {
            seed,
            iid_min_pairwise: min_pairwise_distance(&iid)?,
            compressed_min_pairwise: min_pairwise_distance(&compressed)?,
            iid_energy_to_ref: energy_to_reference(
                &iid,
                &reference,
                ref_self,
                &config.kernel,
                &inner,
            )?,
            compressed_energy_to_ref: energy_to_reference(
                &compressed,
                &reference,
                ref_self,
                &config.kernel,
                &inner,
            )?,
            iid_repetitions: repetition_count(&iid, threshold)?,
            compressed_repetitions: repetition_count(&compressed, threshold)?,
        };
        Ok((record, ref_points))
    });

    let mut records = Vec::with_capacity(n_seeds);
    let mut ref_points = 0;
    for item in per_seed {
        let (record, used) = item?;
        ref_points = used;
        records.push(record);
    }
    Ok(ComparisonReport::assemble(
        config, target, ref_size, threshold, ref_points, records,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[&[f64]]) -> PointCloud {
        PointCloud::from_rows(rows).unwrap()
    }

    #[test]
    fn min_pairwise_examples() {
        assert_eq!(
            min_pairwise_distance(&cloud(&[&[0.0, 0.0], &[3.0, 4.0]])).unwrap(),
            5.0
        );
        assert_eq!(
            min_pairwise_distance(&cloud(&[&[0.0], &[0.0], &[9.0]])).unwrap(),
            0.0
        );
        let square = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(min_pairwise_distance(&square).unwrap(), 1.0);
        assert!(min_pairwise_distance(&cloud(&[&[1.0]])).is_err());
    }

    #[test]
    fn repetition_examples() {
        let square = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(repetition_count(&square, 0.5).unwrap(), 0);
        let same = cloud(&[&[2.0, 2.0], &[2.0, 2.0], &[2.0, 2.0]]);
        assert_eq!(repetition_count(&same, 1e-9).unwrap(), 3);
        assert_eq!(
            repetition_count(&cloud(&[&[0.0], &[0.4], &[9.0]]), 0.5).unwrap(),
            1
        );
        assert!(repetition_count(&square, 0.0).is_err());
        assert!(repetition_count(&cloud(&[&[0.0]]), 0.5).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let s = MetricSummary::of(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!(s.p50, 3.0);
        assert!((s.p10 - 1.4).abs() < 1e-12);
        assert!((s.p90 - 4.6).abs() < 1e-12);
        assert_eq!(s.mean, 3.0);
    }

    #[test]
    fn small_reference_self_term_is_exact() {
        let z = cloud(&[&[-1.0], &[1.0]]);
        let k = KernelParam::new(0.0).unwrap();
        let (v, m) = reference_self_term(&z, &k, &Execution::sequential()).unwrap();
        assert_eq!((v, m), (0.5, 2));
        let x = cloud(&[&[0.0]]);
        let e = energy_to_reference(&x, &z, v, &k, &Execution::sequential()).unwrap();
        assert_eq!(e, metric::squared_distance(&x, &z, &k).unwrap());
    }

    #[test]
    fn degenerate_target_ties_are_not_wins() {
        let atom = PointCloud::from_rows(&[[5.0, -5.0]]).unwrap();
        let config = CompressConfig {
            num_points: 3,
            max_iters: 50,
            batch_size: 20,
            ..CompressConfig::default()
        };
        let r = compare_iid(&TargetSpec::empirical(atom), &config, 1, 50, 0.5).unwrap();
        let rec = &r.records[0];
        assert_eq!(rec.iid_min_pairwise, 0.0);
        assert!(rec.compressed_min_pairwise < 0.05);
        assert_eq!(rec.iid_repetitions, 3);
        assert_eq!(r.win_rates.repetitions, 0.0);
        assert_eq!(r.win_rates.min_pairwise, 0.0);
        for w in [
            r.win_rates.min_pairwise,
            r.win_rates.energy_to_ref,
            r.win_rates.repetitions,
        ] {
            assert!((0.0..=1.0).contains(&w));
        }
    }
}
