#![allow(dead_code)]

use arcs::problems::{LabeledExample, MatrixCompletionData, QuadraticComponent};
use arcs::FiniteSumProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss_vec(r: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * (r.random::<f64>() * 2.0 - 1.0)).collect()
}

pub fn random_logistic(r: &mut ChaCha8Rng, n: usize, d: usize) -> FiniteSumProblem {
    let ex = (0..n)
        .map(|_| {
            let mut feats = Vec::new();
            for k in 0..d {
                if r.random::<f64>() < 0.7 || k == 0 {
                    feats.push((k, r.random::<f64>() * 4.0 - 2.0));
                }
            }
            LabeledExample::new(feats, r.random_range(0..2u8)).unwrap()
        })
        .collect();
    FiniteSumProblem::logistic(ex, d).unwrap()
}

pub fn random_quadratic(r: &mut ChaCha8Rng, n: usize, d: usize) -> FiniteSumProblem {
    let comps = (0..n)
        .map(|_| {
            let m = gauss_vec(r, d * d, 1.0);
            let mut h = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] = (0..d).map(|k| m[i * d + k] * m[j * d + k]).sum::<f64>() / d as f64;
                }
            }
            QuadraticComponent { hessian: h, linear: gauss_vec(r, d, 1.0), constant: r.random() }
        })
        .collect();
    FiniteSumProblem::quadratic(comps).unwrap()
}

pub fn random_completion(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> FiniteSumProblem {
    let mut obs = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if r.random::<f64>() < 0.6 || (i == 0 && j == 0) {
                obs.push((i, j, r.random::<f64>()));
            }
        }
    }
    FiniteSumProblem::matrix_completion(MatrixCompletionData::new(rows, cols, obs, 2.0).unwrap()).unwrap()
}

/// Euclidean projection onto the ℓ1 ball by bisection on the soft threshold.
pub fn project_l1_bisect(x: &[f64], r: f64) -> Vec<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= r {
        return x.to_vec();
    }
    let mass = |t: f64| x.iter().map(|v| (v.abs() - t).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.iter().map(|v| v.signum() * (v.abs() - hi).max(0.0)).collect()
}

/// Random point of the ℓ1 ball of radius `r`.
pub fn l1_point(rg: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    let v = gauss_vec(rg, d, 1.0);
    let s: f64 = v.iter().map(|a| a.abs()).sum::<f64>().max(1e-300);
    let scale = r * rg.random::<f64>() / s;
    v.iter().map(|a| a * scale).collect()
}

pub fn box_point(rg: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rg.random::<f64>()).collect()
}
