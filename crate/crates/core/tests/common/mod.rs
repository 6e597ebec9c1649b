#![allow(dead_code)]

use alpharank_ig::alpharank::{stationary_distribution, AlphaRank, TransitionMatrix};
use alpharank_ig::belief::{GaussianBelief, KernelSpec};
use alpharank_ig::estimators::wasserstein_tv;
use alpharank_ig::rank_belief::RankSampleSet;
use alpharank_ig::rng::{substream, StreamRng};
use alpharank_ig::PayoffMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn rng(seed: u64) -> StreamRng {
    substream(seed, &[0x7e57])
}

/// Dense chain with strictly positive rows.
pub fn random_chain(rng: &mut StreamRng, n: usize) -> TransitionMatrix {
    let mut data = vec![0.0; n * n];
    for row in data.chunks_mut(n) {
        for v in row.iter_mut() {
            *v = rng.gen::<f64>().powi(3) + 1e-3;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
        let fix: f64 = 1.0 - row.iter().sum::<f64>();
        row[0] += fix;
    }
    TransitionMatrix::new(n, data).unwrap()
}

/// Stationary distribution by least squares on `[Cᵀ − I; 1ᵀ] x = e_{n+1}` via SVD.
pub fn svd_stationary(c: &TransitionMatrix) -> Vec<f64> {
    let n = c.len();
    let a = DMatrix::from_fn(n + 1, n, |i, j| {
        if i == n {
            1.0
        } else {
            c.get(j, i) - if i == j { 1.0 } else { 0.0 }
        }
    });
    let mut b = DVector::zeros(n + 1);
    b[n] = 1.0;
    let x = a.svd(true, true).solve(&b, 1e-14).unwrap();
    x.iter().copied().collect()
}

pub fn solver_stationary(c: &TransitionMatrix) -> AlphaRank {
    stationary_distribution(c).unwrap()
}

pub fn random_simplex(rng: &mut StreamRng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = v.iter().sum();
    let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
    let fix = 1.0 - out.iter().sum::<f64>();
    out[0] += fix;
    out
}

/// Minimum mean cost over all perfect matchings of two equal-size sample lists.
pub fn brute_force_assignment(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn rec(a: &[Vec<f64>], b: &[Vec<f64>], i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if i == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c: f64 = 0.5 * a[i].iter().zip(&b[j]).map(|(x, y)| (x - y).abs()).sum::<f64>();
                rec(a, b, i + 1, used, acc + c, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, 0, &mut vec![false; b.len()], 0.0, &mut best);
    best / a.len() as f64
}

pub fn wass(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    wasserstein_tv(
        &RankSampleSet::from_samples(a, 1e-6).unwrap(),
        &RankSampleSet::from_samples(b, 1e-6).unwrap(),
    )
    .unwrap()
}

/// Scalar conjugate posterior after `obs` under prior `N(mu0, var0)` and noise `noise`.
pub fn conjugate(mu0: f64, var0: f64, noise: f64, obs: &[f64]) -> (f64, f64) {
    let precision = 1.0 / var0 + obs.len() as f64 / noise;
    let mean = (mu0 / var0 + obs.iter().sum::<f64>() / noise) / precision;
    (mean, 1.0 / precision)
}

pub fn independent(mean: f64, var: f64, entries: usize, noise: f64) -> GaussianBelief {
    GaussianBelief::prior(&KernelSpec::Independent { mean, variance: var }, entries, noise).unwrap()
}

pub fn random_matrix(rng: &mut StreamRng, s: usize) -> PayoffMatrix {
    PayoffMatrix::new(s, (0..s * s).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

/// A second matrix with the same comparison pattern as `m` but fresh values.
pub fn same_pattern(rng: &mut StreamRng, m: &PayoffMatrix) -> PayoffMatrix {
    let s = m.size();
    let mut out = random_matrix(rng, s);
    for i in 0..s {
        for j in i + 1..s {
            let (lo, hi) = {
                let a: f64 = rng.gen::<f64>() * 10.0 - 5.0;
                let b: f64 = rng.gen::<f64>() * 10.0 - 5.0;
                (a.min(b), a.max(b) + 1e-6)
            };
            let (x, y) = (m.get(j, i), m.get(i, j));
            let (nx, ny) = if x > y {
                (hi, lo)
            } else if x < y {
                (lo, hi)
            } else {
                (lo, lo)
            };
            out.set(j, i, nx);
            out.set(i, j, ny);
        }
    }
    out
}
