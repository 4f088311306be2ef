//! Oracles that share no code with the library's evaluation paths.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Direct triple-sum evaluation of the squared distance, kernel written as
/// `sqrt(r² + a²) - a`.
pub fn naive_sq_distance(x: &[Vec<f64>], z: &[Vec<f64>], a: f64) -> f64 {
    let k = |u: &Vec<f64>, v: &Vec<f64>| {
        let r2: f64 = u.iter().zip(v).map(|(p, q)| (p - q).powi(2)).sum();
        (r2 + a * a).sqrt() - a
    };
    let (j, b) = (x.len() as f64, z.len() as f64);
    let mut cross = 0.0;
    for u in x {
        for v in z {
            cross += k(u, v);
        }
    }
    let mut xx = 0.0;
    for u in x {
        for v in x {
            xx += k(u, v);
        }
    }
    let mut zz = 0.0;
    for u in z {
        for v in z {
            zz += k(u, v);
        }
    }
    cross / (j * b) - xx / (2.0 * j * j) - zz / (2.0 * b * b)
}

/// Central differences of [`naive_sq_distance`] in every coordinate of `x`,
/// row-major.
pub fn naive_fd_gradient(x: &[Vec<f64>], z: &[Vec<f64>], a: f64, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..x.len() {
        for c in 0..x[i].len() {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i][c] += h;
            minus[i][c] -= h;
            out.push(
                (naive_sq_distance(&plus, z, a) - naive_sq_distance(&minus, z, a)) / (2.0 * h),
            );
        }
    }
    out
}

/// `E|x - Z|` for `Z ~ N(0, 1)` from a large sorted sample with prefix sums.
pub struct AbsMoment {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl AbsMoment {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut sorted: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for v in &sorted {
            prefix.push(prefix.last().unwrap() + v);
        }
        Self { sorted, prefix }
    }

    pub fn at(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let below = self.sorted.partition_point(|v| *v < x);
        let sum_below = self.prefix[below];
        let sum_above = self.prefix[n] - sum_below;
        (x * below as f64 - sum_below + sum_above - x * (n - below) as f64) / n as f64
    }

    /// Grid minimizer of the one-point loss `E|x - Z|` over `[-3, 3]`,
    /// step 0.001.
    pub fn one_point_minimizer(&self) -> f64 {
        grid(-3.0, 3.0, 0.001)
            .map(|x| (x, self.at(x)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
            .0
    }

    /// Grid minimizer over symmetric pairs `{-c, c}`, `c ∈ [0, 3]`, of
    /// `(E|c - Z| + E|c + Z|)/2 - c/2`.
    pub fn symmetric_pair_minimizer(&self) -> f64 {
        grid(0.0, 3.0, 0.001)
            .map(|c| (c, 0.5 * (self.at(c) + self.at(-c)) - 0.5 * c))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
            .0
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(move |i| lo + i as f64 * step)
}

/// Monte-Carlo `(E|z|, E|z - z'|)` for `z, z' ~ N(0, I_2)` i.i.d.
pub fn gaussian2_norm_moments(draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut norm = 0.0;
    let mut diff = 0.0;
    for _ in 0..draws {
        let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        norm += z[0].hypot(z[1]);
        diff += (z[0] - z[2]).hypot(z[1] - z[3]);
    }
    (norm / draws as f64, diff / draws as f64)
}
