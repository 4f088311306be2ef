mod common;

use measure_compress::compressor::{self, initial_points};
use measure_compress::metric::{self, KernelParam};
use measure_compress::{
    compress, loss_estimate, CompressConfig, Execution, PointCloud, TargetSpec,
};

fn gaussian_config(dim: usize, num_points: usize, seed: u64) -> CompressConfig {
    CompressConfig {
        num_points,
        dim,
        seed,
        ..CompressConfig::default()
    }
}

#[test]
fn one_point_compressor_centers_at_the_median() {
    let oracle = common::AbsMoment::new(1_000_000, 99).one_point_minimizer();
    assert!(oracle.abs() < 0.01, "oracle {oracle}");
    let r = compress(&TargetSpec::standard_gaussian(1), &gaussian_config(1, 1, 3)).unwrap();
    let x = r.final_points.row(0)[0];
    assert!((x - oracle).abs() < 0.15 && x.abs() < 0.15, "{x}");
}

#[test]
fn two_point_compressor_is_symmetric() {
    let c = common::AbsMoment::new(1_000_000, 100).symmetric_pair_minimizer();
    // the energy-optimal pair sits at the quartiles, ±0.674
    assert!((c - 0.6745).abs() < 0.01, "oracle {c}");
    for seed in [1, 2, 3] {
        let r = compress(
            &TargetSpec::standard_gaussian(1),
            &gaussian_config(1, 2, seed),
        )
        .unwrap();
        let (x1, x2) = (r.final_points.row(0)[0], r.final_points.row(1)[0]);
        assert!((x1 + x2).abs() < 0.1, "{x1} {x2}");
        let (lo, hi) = (x1.min(x2), x1.max(x2));
        assert!(
            (lo + c).abs() < 0.15 && (hi - c).abs() < 0.15,
            "{lo} {hi} vs ±{c}"
        );
    }
}

#[test]
fn single_atom_target_collapses() {
    let atom = PointCloud::from_rows(&[[5.0, -5.0]]).unwrap();
    let cfg = CompressConfig {
        num_points: 3,
        ..CompressConfig::default()
    };
    let r = compress(&TargetSpec::empirical(atom), &cfg).unwrap();
    for p in r.final_points.rows() {
        assert!(
            ((p[0] - 5.0).powi(2) + (p[1] + 5.0).powi(2)).sqrt() < 0.05,
            "{p:?}"
        );
    }
}

#[test]
fn single_atom_optimum_beats_spread_configurations() {
    // Along the spread direction t ↦ {atom - t e, atom, atom + t e}, the loss
    // is minimized at t = 0.
    let k = KernelParam::new(1e-6).unwrap();
    let atom = PointCloud::from_rows(&[[5.0, -5.0]]).unwrap();
    let loss = |t: f64| {
        let x = PointCloud::from_rows(&[[5.0 - t, -5.0], [5.0, -5.0], [5.0 + t, -5.0]]).unwrap();
        metric::squared_distance(&x, &atom, &k).unwrap()
    };
    assert!(loss(0.0).abs() < 1e-12);
    for i in 1..=2000 {
        let t = i as f64 * 0.005;
        assert!(loss(t) > loss(0.0), "t={t}");
    }
}

#[test]
fn coincident_points_have_a_finite_gradient_when_smoothed() {
    let k = KernelParam::new(1e-6).unwrap();
    let x = PointCloud::from_rows(&[[0.1, 0.0], [0.1, 0.0], [0.1, 1e-9]]).unwrap();
    let z = PointCloud::from_rows(&[[0.0, 0.0]]).unwrap();
    let lg = metric::loss_and_gradient(&x, &z, &k, &Execution::sequential()).unwrap();
    assert!(lg.gradient.iter().all(|g| g.is_finite()));
}

fn windows(r: &measure_compress::RunReport, width_iters: usize) -> Vec<(f64, f64, usize)> {
    let per = width_iters / r.config.record_loss_every;
    r.loss_history
        .chunks(per)
        .filter(|c| c.len() == per)
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().map(|h| h.partial_loss).sum::<f64>() / n;
            let var = c
                .iter()
                .map(|h| (h.partial_loss - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            (mean, var, c.len())
        })
        .collect()
}

/// Windowed means never rise by more than three combined standard errors.
fn noisy_non_increasing(w: &[(f64, f64, usize)]) -> bool {
    w.windows(2).all(|p| {
        let (m0, v0, n0) = p[0];
        let (m1, v1, n1) = p[1];
        m1 <= m0 + 3.0 * (v0 / n0 as f64 + v1 / n1 as f64).sqrt()
    })
}

#[test]
fn reference_runs_improve_and_descend() {
    let t = TargetSpec::standard_gaussian(2);
    let mut improved = 0;
    let mut descending = 0;
    for seed in 0..100u64 {
        let cfg = gaussian_config(2, 10, seed);
        let r = compress(&t, &cfg).unwrap();
        assert_eq!((r.final_points.len(), r.final_points.dim()), (10, 2));

        let init = initial_points(&t, &cfg).unwrap();
        let before =
            loss_estimate(&init, &t, r.final_loss_ref_size, &cfg.kernel, cfg.seed).unwrap();
        if r.final_loss_estimate < before {
            improved += 1;
        }

        let w = windows(&r, 100);
        assert_eq!(w.len(), 20);
        if noisy_non_increasing(&w[4..]) {
            descending += 1;
        }
    }
    assert!(improved >= 95, "improved in {improved}/100");
    assert!(descending >= 90, "descending in {descending}/100");
}

#[test]
fn randomized_shapes_stay_finite() {
    use measure_compress::optimizer::{Method, OptimizerConfig};
    let methods = [
        Method::Adam,
        Method::Sgd,
        Method::Momentum,
        Method::Nesterov,
    ];
    for (i, (dim, j)) in [(1, 1), (1, 5), (3, 2), (4, 7), (8, 3), (2, 20)]
        .into_iter()
        .enumerate()
    {
        let cfg = CompressConfig {
            num_points: j,
            dim,
            batch_size: 64,
            max_iters: 150,
            seed: i as u64,
            record_loss_every: 1,
            optimizer: OptimizerConfig::with_method(methods[i % 4], 0.01),
            ..CompressConfig::default()
        };
        let r = compress(&TargetSpec::standard_gaussian(dim), &cfg).unwrap();
        assert_eq!((r.final_points.len(), r.final_points.dim()), (j, dim));
        assert!(r.final_points.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(r.loss_history.len(), 150);
        assert!(r.final_loss_estimate.is_finite());
    }
}

#[test]
fn reports_are_reproducible() {
    let t = TargetSpec::standard_gaussian(2);
    let cfg = CompressConfig {
        max_iters: 300,
        seed: 42,
        ..CompressConfig::default()
    };
    let mut a = compress(&t, &cfg).unwrap();
    let mut b = compress(&t, &cfg).unwrap();
    a.wall_time_seconds = 0.0;
    b.wall_time_seconds = 0.0;
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn loss_estimate_against_itself_is_zero() {
    let t = TargetSpec::standard_gaussian(2);
    let reference = t
        .sample(
            500,
            &mut measure_compress::streams::stream(
                8,
                measure_compress::streams::Stream::Evaluation,
            ),
        )
        .unwrap();
    let d = metric::squared_distance(&reference, &reference, &KernelParam::default()).unwrap();
    assert!(d.abs() < 1e-10, "{d}");
}

#[test]
fn loss_estimate_single_reference_point() {
    let t = TargetSpec::standard_gaussian(2);
    let k = KernelParam::default();
    let x = PointCloud::from_rows(&[[0.3, -0.2], [1.0, 0.5], [-0.7, 0.1]]).unwrap();
    let singles: Vec<f64> = (0..100)
        .map(|s| loss_estimate(&x, &t, 1, &k, s).unwrap())
        .collect();
    assert!(singles.windows(2).any(|w| w[0] != w[1]));
    let mean = singles.iter().sum::<f64>() / 100.0;

    let large = loss_estimate(&x, &t, 20_000, &k, 1000).unwrap();
    // A single reference point carries no reference-self term; add it back.
    let z = t
        .sample(
            10_000,
            &mut measure_compress::streams::stream(5, measure_compress::streams::Stream::Reference),
        )
        .unwrap();
    let zself = metric::self_sum(&z, &k, &Execution::sequential()) / (2.0 * 1e4 * (1e4 - 1.0));
    let expected = large + zself;
    assert!(
        (mean - expected).abs() <= 0.2 * expected,
        "{mean} vs {expected}"
    );
}

#[test]
fn initial_points_come_from_the_target() {
    let t = TargetSpec::standard_gaussian(3);
    let cfg = gaussian_config(3, 4, 9);
    let init = initial_points(&t, &cfg).unwrap();
    let r = compressor::compress(
        &t,
        &CompressConfig {
            max_iters: 1,
            ..cfg.clone()
        },
    )
    .unwrap();
    // one Adam step moves every coordinate by at most ~lr
    for (a, b) in init.as_slice().iter().zip(r.final_points.as_slice()) {
        assert!((a - b).abs() <= 1.01 * cfg.optimizer.learning_rate);
    }
}
