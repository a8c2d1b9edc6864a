//! Seeded synthetic instances for tests and desk-scale benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::image::Grid;
use super::{FiniteSumProblem, LabeledExample, ProblemError, QuadraticComponent};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Dense Gaussian features with labels drawn from a planted sparse model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Nonzeros of the planted weight vector.
    pub support: usize,
    /// ℓ1 norm of the planted weight vector.
    pub weight_l1: f64,
}

impl LogisticSpec {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        Self { n, d, seed, support: d.min(5).max(1), weight_l1: 20.0 }
    }

    /// Features are `N(0, 1/d)`; the label is 1 with probability
    /// `σ(−wᵀa)`, matching the loss convention of
    /// [`FiniteSumProblem::logistic`].
    pub fn examples(&self) -> Vec<LabeledExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let support = self.support.clamp(1, self.d);
        let mut w = vec![0.0; self.d];
        let per = self.weight_l1 / support as f64;
        for k in rand::seq::index::sample(&mut rng, self.d, support) {
            w[k] = if rng.random::<bool>() { per } else { -per };
        }
        let s = 1.0 / (self.d as f64).sqrt();
        (0..self.n)
            .map(|_| {
                let a: Vec<f64> = (0..self.d).map(|_| s * normal(&mut rng)).collect();
                let z: f64 = a.iter().zip(&w).map(|(x, y)| x * y).sum();
                let p_one = 1.0 / (1.0 + z.exp());
                let label = u8::from(rng.random::<f64>() < p_one);
                LabeledExample::new(a.into_iter().enumerate().collect(), label).expect("dense example")
            })
            .collect()
    }

    pub fn build(&self) -> Result<FiniteSumProblem, ProblemError> {
        FiniteSumProblem::logistic(self.examples(), self.d)
    }
}

/// Quadratic components sharing an eigenbasis, with component spectra
/// jittered around a common profile and linear terms chosen so that the
/// unconstrained minimizer of the average is a planted point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Smallest and largest eigenvalue of the spectral profile.
    pub min_eig: f64,
    pub max_eig: f64,
    /// Relative per-component jitter of each eigenvalue, in `[0, 1)`.
    pub jitter: f64,
    /// ℓ1 norm of the planted unconstrained minimizer.
    pub center_l1: f64,
    /// Scale of the zero-mean per-component linear perturbations.
    pub noise: f64,
}

impl QuadraticSpec {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        Self { n, d, seed, min_eig: 0.15, max_eig: 1.0, jitter: 0.5, center_l1: 0.5, noise: 1.0 }
    }

    pub fn build(&self) -> Result<FiniteSumProblem, ProblemError> {
        if self.n == 0 || self.d == 0 {
            return Err(ProblemError::Invalid("n and d must be positive".into()));
        }
        if !(self.min_eig > 0.0 && self.max_eig >= self.min_eig && (0.0..1.0).contains(&self.jitter)) {
            return Err(ProblemError::Invalid("invalid spectrum parameters".into()));
        }
        let (n, d) = (self.n, self.d);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let gauss = DMatrix::from_fn(d, d, |_, _| normal(&mut rng));
        let q = gauss.qr().q();
        let profile: Vec<f64> = (0..d)
            .map(|k| {
                let t = if d == 1 { 0.0 } else { k as f64 / (d - 1) as f64 };
                self.min_eig * (self.max_eig / self.min_eig).powf(t)
            })
            .collect();
        let mut center: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let l1: f64 = center.iter().map(|v| v.abs()).sum();
        center.iter_mut().for_each(|v| *v *= self.center_l1 / l1.max(f64::MIN_POSITIVE));

        let mut noise: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| self.noise * normal(&mut rng)).collect()).collect();
        if n > 1 {
            for k in 0..d {
                let mean = noise.iter().map(|v| v[k]).sum::<f64>() / n as f64;
                noise.iter_mut().for_each(|v| v[k] -= mean);
            }
        } else {
            noise[0].iter_mut().for_each(|v| *v = 0.0);
        }
        let xc = nalgebra::DVector::from_column_slice(&center);
        let components = noise
            .into_iter()
            .map(|e| {
                let lam = nalgebra::DVector::from_iterator(
                    d,
                    profile.iter().map(|p| p * (1.0 + self.jitter * (2.0 * rng.random::<f64>() - 1.0))),
                );
                let a = &q * DMatrix::from_diagonal(&lam) * q.transpose();
                let a = (&a + a.transpose()) * 0.5;
                let ax = &a * &xc;
                let linear: Vec<f64> = ax.iter().zip(&e).map(|(v, z)| v + z).collect();
                QuadraticComponent { hessian: a.transpose().as_slice().to_vec(), linear, constant: 0.0 }
            })
            .collect();
        FiniteSumProblem::quadratic(components)
    }
}

/// A `rows × cols` matrix of rank at most `rank` with entries in `[0, 1]`.
pub fn low_rank_grid(rows: usize, cols: usize, rank: usize, seed: u64) -> Grid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = rank.max(1);
    let u: Vec<f64> = (0..rows * rank).map(|_| rng.random::<f64>()).collect();
    let v: Vec<f64> = (0..cols * rank).map(|_| rng.random::<f64>()).collect();
    let values = (0..rows * cols)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            (0..rank).map(|j| u[r * rank + j] * v[c * rank + j]).sum::<f64>() / rank as f64
        })
        .collect();
    Grid { rows, cols, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::FiniteSum;

    #[test]
    fn quadratic_planted_minimizer_has_requested_l1_norm() {
        let spec = QuadraticSpec::new(10, 4, 3);
        let p = spec.build().unwrap();
        assert!(p.strong_convexity() > 0.0 && p.strong_convexity() <= p.smoothness());
        let crate::problems::ProblemData::Quadratic(cs) = p.data() else { unreachable!() };
        let mut a = DMatrix::<f64>::zeros(4, 4);
        let mut b = nalgebra::DVector::<f64>::zeros(4);
        for c in cs {
            a += DMatrix::from_row_slice(4, 4, &c.hessian);
            b += nalgebra::DVector::from_column_slice(&c.linear);
        }
        let x = a.lu().solve(&b).unwrap();
        assert!((x.iter().map(|v| v.abs()).sum::<f64>() - spec.center_l1).abs() < 1e-10);
        let g = p.gradient(x.as_slice()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = LogisticSpec::new(20, 5, 9).examples();
        let b = LogisticSpec::new(20, 5, 9).examples();
        assert_eq!(a, b);
        assert_ne!(a, LogisticSpec::new(20, 5, 10).examples());
        assert_eq!(low_rank_grid(3, 4, 2, 1), low_rank_grid(3, 4, 2, 1));
        let g = low_rank_grid(3, 4, 2, 1);
        assert!(g.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
