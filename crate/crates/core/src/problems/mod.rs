//! Finite-sum objectives `f(x) = (1/n) Σ_i f_i(x)` and their datasets.
//!
//! Three families are supported:
//!
//! * logistic regression with binary labels, one component per example,
//! * matrix completion, one component per observed entry `(X_ij - Y_ij)^2`,
//! * synthetic quadratics `½ xᵀA_i x − b_iᵀx + c_i`.
//!
//! Matrices are stored flattened in row-major order, so a `d1 × d2` iterate
//! is a point of dimension `d1 * d2`.

pub mod image;
pub mod libsvm;
pub mod synthetic;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::dot;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("component index {index} out of range for {n} components")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Access to the components of a finite-sum objective.
///
/// Implementors only need the per-component value and gradient; the full
/// objective and gradient are averages over components.
pub trait FiniteSum {
    fn num_components(&self) -> usize;

    fn dim(&self) -> usize;

    /// Lipschitz constant of every component gradient.
    fn smoothness(&self) -> f64;

    /// Strong-convexity modulus of the average (0 when merely convex).
    fn strong_convexity(&self) -> f64 {
        0.0
    }

    fn component_value(&self, i: usize, x: &[f64]) -> Result<f64, ProblemError>;

    /// Adds `weight * ∇f_i(x)` to `out`.
    fn add_component_gradient(
        &self,
        i: usize,
        x: &[f64],
        weight: f64,
        out: &mut [f64],
    ) -> Result<(), ProblemError>;

    fn component_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let mut g = vec![0.0; self.dim()];
        self.add_component_gradient(i, x, 1.0, &mut g)?;
        Ok(g)
    }

    /// Full objective, evaluated without any oracle accounting.
    fn value(&self, x: &[f64]) -> Result<f64, ProblemError> {
        let n = self.num_components();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.component_value(i, x)?;
        }
        Ok(acc / n as f64)
    }

    /// Full gradient, evaluated without any oracle accounting.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let n = self.num_components();
        let w = 1.0 / n as f64;
        let mut g = vec![0.0; self.dim()];
        for i in 0..n {
            self.add_component_gradient(i, x, w, &mut g)?;
        }
        Ok(g)
    }

    /// `dirᵀ ∇²f dir` for objectives with a constant Hessian; `None` otherwise.
    fn curvature(&self, _dir: &[f64]) -> Option<f64> {
        None
    }
}

/// One binary-labelled, sparsely stored example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    features: Vec<(usize, f64)>,
    label: u8,
}

impl LabeledExample {
    /// Indices must be strictly increasing and the label must be 0 or 1.
    pub fn new(features: Vec<(usize, f64)>, label: u8) -> Result<Self, ProblemError> {
        if label > 1 {
            return Err(ProblemError::Invalid(format!("label {label} is not 0 or 1")));
        }
        if features.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ProblemError::Invalid("feature indices must be strictly increasing".into()));
        }
        if features.iter().any(|(_, v)| !v.is_finite()) {
            return Err(ProblemError::Invalid("non-finite feature value".into()));
        }
        Ok(Self { features, label })
    }

    pub fn features(&self) -> &[(usize, f64)] {
        &self.features
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    /// Largest feature index plus one (0 for an empty feature list).
    pub fn min_dim(&self) -> usize {
        self.features.last().map_or(0, |(k, _)| k + 1)
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.features.iter().map(|&(k, v)| v * x[k]).sum()
    }

    fn norm_sq(&self) -> f64 {
        self.features.iter().map(|(_, v)| v * v).sum()
    }
}

/// Observed entries of a partially known matrix together with the
/// nuclear-norm radius of the completion problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCompletionData {
    rows: usize,
    cols: usize,
    observed: Vec<(usize, usize, f64)>,
    radius: f64,
}

impl MatrixCompletionData {
    pub fn new(
        rows: usize,
        cols: usize,
        mut observed: Vec<(usize, usize, f64)>,
        radius: f64,
    ) -> Result<Self, ProblemError> {
        if rows == 0 || cols == 0 {
            return Err(ProblemError::Invalid("matrix dimensions must be positive".into()));
        }
        if observed.is_empty() {
            return Err(ProblemError::Invalid("no observed entries".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ProblemError::Invalid(format!("nuclear radius {radius} must be positive")));
        }
        for &(i, j, v) in &observed {
            if i >= rows || j >= cols {
                return Err(ProblemError::Invalid(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(ProblemError::Invalid(format!("entry ({i}, {j}) is not finite")));
            }
        }
        observed.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = observed.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(ProblemError::Invalid(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Self { rows, cols, observed, radius })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn observed(&self) -> &[(usize, usize, f64)] {
        &self.observed
    }
}

/// `f_i(x) = ½ xᵀ A x − bᵀ x + c` with symmetric positive semidefinite `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticComponent {
    /// Row-major `d × d` matrix.
    pub hessian: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticComponent {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn hess_apply(&self, x: &[f64], weight: f64, out: &mut [f64]) {
        let d = self.dim();
        for (r, o) in out.iter_mut().enumerate() {
            *o += weight * dot(&self.hessian[r * d..(r + 1) * d], x);
        }
    }

    fn quad_form(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        (0..d).map(|r| x[r] * dot(&self.hessian[r * d..(r + 1) * d], x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Logistic,
    MatrixCompletion,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProblemData {
    Logistic(Vec<LabeledExample>),
    MatrixCompletion(MatrixCompletionData),
    Quadratic(Vec<QuadraticComponent>),
}

/// A concrete finite-sum objective with its smoothness metadata.
///
/// Instances are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSumProblem {
    dim: usize,
    data: ProblemData,
    smoothness: f64,
    strong_convexity: f64,
}

impl FiniteSumProblem {
    /// Logistic regression `−(y log σ(−aᵀx) + (1 − y) log σ(aᵀx))` per example.
    pub fn logistic(examples: Vec<LabeledExample>, dim: usize) -> Result<Self, ProblemError> {
        if examples.is_empty() {
            return Err(ProblemError::Invalid("no examples".into()));
        }
        if dim == 0 {
            return Err(ProblemError::Invalid("dimension must be positive".into()));
        }
        if let Some(e) = examples.iter().find(|e| e.min_dim() > dim) {
            return Err(ProblemError::Invalid(format!(
                "feature index {} exceeds dimension {dim}",
                e.min_dim() - 1
            )));
        }
        let smoothness = examples.iter().map(|e| e.norm_sq() / 4.0).fold(0.0, f64::max);
        Self::checked(dim, ProblemData::Logistic(examples), smoothness, 0.0)
    }

    /// One component per observed entry, so `n = |Ω|` and `d = rows * cols`.
    pub fn matrix_completion(data: MatrixCompletionData) -> Result<Self, ProblemError> {
        let dim = data.rows * data.cols;
        Self::checked(dim, ProblemData::MatrixCompletion(data), 2.0, 0.0)
    }

    /// Quadratic components; the smoothness constant is the largest
    /// eigenvalue over all `A_i` and the strong-convexity modulus is the
    /// smallest eigenvalue of their mean.
    pub fn quadratic(components: Vec<QuadraticComponent>) -> Result<Self, ProblemError> {
        let first = components
            .first()
            .ok_or_else(|| ProblemError::Invalid("no components".into()))?;
        let d = first.dim();
        if d == 0 {
            return Err(ProblemError::Invalid("dimension must be positive".into()));
        }
        let mut mean = DMatrix::<f64>::zeros(d, d);
        let mut smoothness = 0.0f64;
        for (i, c) in components.iter().enumerate() {
            if c.linear.len() != d || c.hessian.len() != d * d {
                return Err(ProblemError::Invalid(format!("component {i} has inconsistent shape")));
            }
            let a = DMatrix::from_row_slice(d, d, &c.hessian);
            if (&a - a.transpose()).abs().max() > 1e-10 * (1.0 + a.abs().max()) {
                return Err(ProblemError::Invalid(format!("component {i} Hessian is not symmetric")));
            }
            let eig = SymmetricEigen::new(a.clone()).eigenvalues;
            if eig.min() < -1e-10 * (1.0 + eig.max().abs()) {
                return Err(ProblemError::Invalid(format!("component {i} Hessian is not PSD")));
            }
            smoothness = smoothness.max(eig.max());
            mean += a;
        }
        mean /= components.len() as f64;
        let tau = SymmetricEigen::new(mean).eigenvalues.min().max(0.0).min(smoothness);
        Self::checked(d, ProblemData::Quadratic(components), smoothness, tau)
    }

    fn checked(
        dim: usize,
        data: ProblemData,
        smoothness: f64,
        strong_convexity: f64,
    ) -> Result<Self, ProblemError> {
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(ProblemError::Invalid(format!("smoothness constant {smoothness} must be positive")));
        }
        Ok(Self { dim, data, smoothness, strong_convexity })
    }

    /// Overrides the strong-convexity modulus, e.g. with a known lower bound.
    pub fn with_strong_convexity(mut self, tau: f64) -> Result<Self, ProblemError> {
        if !(tau >= 0.0 && tau <= self.smoothness) {
            return Err(ProblemError::Invalid(format!(
                "strong convexity {tau} must lie in [0, L = {}]",
                self.smoothness
            )));
        }
        self.strong_convexity = tau;
        Ok(self)
    }

    pub fn kind(&self) -> ProblemKind {
        match self.data {
            ProblemData::Logistic(_) => ProblemKind::Logistic,
            ProblemData::MatrixCompletion(_) => ProblemKind::MatrixCompletion,
            ProblemData::Quadratic(_) => ProblemKind::Quadratic,
        }
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    fn check(&self, i: usize, x: &[f64]) -> Result<(), ProblemError> {
        let n = self.num_components();
        if i >= n {
            return Err(ProblemError::IndexOutOfRange { index: i, n });
        }
        if x.len() != self.dim {
            return Err(ProblemError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl FiniteSum for FiniteSumProblem {
    fn num_components(&self) -> usize {
        match &self.data {
            ProblemData::Logistic(ex) => ex.len(),
            ProblemData::MatrixCompletion(m) => m.observed.len(),
            ProblemData::Quadratic(c) => c.len(),
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    fn component_value(&self, i: usize, x: &[f64]) -> Result<f64, ProblemError> {
        self.check(i, x)?;
        Ok(match &self.data {
            ProblemData::Logistic(ex) => {
                // −y log σ(−z) − (1−y) log σ(z) = y·softplus(z) + (1−y)·softplus(−z)
                let e = &ex[i];
                let z = e.margin(x);
                if e.label == 1 {
                    softplus(z)
                } else {
                    softplus(-z)
                }
            }
            ProblemData::MatrixCompletion(m) => {
                let (r, c, y) = m.observed[i];
                let diff = x[r * m.cols + c] - y;
                diff * diff
            }
            ProblemData::Quadratic(cs) => {
                let c = &cs[i];
                0.5 * c.quad_form(x) - dot(&c.linear, x) + c.constant
            }
        })
    }

    fn add_component_gradient(
        &self,
        i: usize,
        x: &[f64],
        weight: f64,
        out: &mut [f64],
    ) -> Result<(), ProblemError> {
        self.check(i, x)?;
        if out.len() != self.dim {
            return Err(ProblemError::DimensionMismatch { expected: self.dim, got: out.len() });
        }
        match &self.data {
            ProblemData::Logistic(ex) => {
                let e = &ex[i];
                let z = e.margin(x);
                // d/dz of the loss above is σ(z) − (1 − y)
                let coef = if e.label == 1 { sigmoid(z) } else { -sigmoid(-z) };
                for &(k, v) in &e.features {
                    out[k] += weight * coef * v;
                }
            }
            ProblemData::MatrixCompletion(m) => {
                let (r, c, y) = m.observed[i];
                let k = r * m.cols + c;
                out[k] += weight * 2.0 * (x[k] - y);
            }
            ProblemData::Quadratic(cs) => {
                let c = &cs[i];
                c.hess_apply(x, weight, out);
                for (o, b) in out.iter_mut().zip(&c.linear) {
                    *o -= weight * b;
                }
            }
        }
        Ok(())
    }

    fn curvature(&self, dir: &[f64]) -> Option<f64> {
        match &self.data {
            ProblemData::Logistic(_) => None,
            ProblemData::MatrixCompletion(m) => {
                let s: f64 = m
                    .observed
                    .iter()
                    .map(|&(r, c, _)| {
                        let v = dir[r * m.cols + c];
                        2.0 * v * v
                    })
                    .sum();
                Some(s / m.observed.len() as f64)
            }
            ProblemData::Quadratic(cs) => {
                let s: f64 = cs.iter().map(|c| c.quad_form(dir)).sum();
                Some(s / cs.len() as f64)
            }
        }
    }
}

/// Draws `round(fraction · rows · cols)` distinct entries uniformly without
/// replacement. The result is sorted row-major and depends only on `seed`.
pub fn make_mask(
    rows: usize,
    cols: usize,
    fraction_observed: f64,
    seed: u64,
) -> Result<Vec<(usize, usize)>, ProblemError> {
    if rows == 0 || cols == 0 {
        return Err(ProblemError::Invalid("mask dimensions must be positive".into()));
    }
    if !(fraction_observed > 0.0 && fraction_observed <= 1.0) {
        return Err(ProblemError::Invalid(format!(
            "observed fraction {fraction_observed} must lie in (0, 1]"
        )));
    }
    let total = rows * cols;
    let count = ((fraction_observed * total as f64).round() as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, total, count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| (k / cols, k % cols)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn logistic(rows: &[(&[(usize, f64)], u8)], d: usize) -> FiniteSumProblem {
        let ex = rows
            .iter()
            .map(|(f, y)| LabeledExample::new(f.to_vec(), *y).unwrap())
            .collect();
        FiniteSumProblem::logistic(ex, d).unwrap()
    }

    fn single_entry(y: f64) -> FiniteSumProblem {
        let data = MatrixCompletionData::new(2, 2, vec![(0, 0, y)], 1.0).unwrap();
        FiniteSumProblem::matrix_completion(data).unwrap()
    }

    #[test]
    fn logistic_value_at_origin_is_log_two() {
        let p = logistic(&[(&[(0, 1.0)], 1)], 2);
        assert_relative_eq!(p.component_value(0, &[0.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn logistic_value_negative_label() {
        // −log σ(2) = log(1 + e^{−2})
        let p = logistic(&[(&[(0, 2.0)], 0)], 1);
        let v = p.component_value(0, &[1.0]).unwrap();
        assert_relative_eq!(v, 0.126928011042973, epsilon = 1e-12);
    }

    #[test]
    fn logistic_gradients_match_value_derivative() {
        // label 1 at the origin: d/dz softplus(z) = σ(0) = 1/2
        let p = logistic(&[(&[(0, 1.0)], 1)], 2);
        assert_eq!(p.component_gradient(0, &[0.0, 0.0]).unwrap(), vec![0.5, 0.0]);
        // label 0, a = 2, x = 1: central difference of log(1 + e^{−2x}) at x = 1
        let p = logistic(&[(&[(0, 2.0)], 0)], 1);
        let g = p.component_gradient(0, &[1.0]).unwrap()[0];
        let h = 1e-6;
        let fd = (p.component_value(0, &[1.0 + h]).unwrap() - p.component_value(0, &[1.0 - h]).unwrap())
            / (2.0 * h);
        assert_relative_eq!(g, fd, max_relative = 1e-8);
        assert_relative_eq!(g, -0.238405844044235, epsilon = 1e-12);
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        let p = logistic(&[(&[(0, 1.0)], 0)], 1);
        assert_relative_eq!(p.component_value(0, &[-800.0]).unwrap(), 800.0, epsilon = 1e-9);
        assert!(p.component_value(0, &[800.0]).unwrap() >= 0.0);
        assert!(p.component_gradient(0, &[-800.0]).unwrap()[0].is_finite());
    }

    #[test]
    fn matrix_entry_value_and_gradient() {
        let p = single_entry(3.0);
        let x = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(p.component_value(0, &x).unwrap(), 4.0);
        assert_eq!(p.component_gradient(0, &x).unwrap(), vec![-4.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn smoothness_constants() {
        assert_eq!(logistic(&[(&[(0, 2.0)], 1)], 2).smoothness(), 1.0);
        assert_eq!(single_entry(0.0).smoothness(), 2.0);
        let p = logistic(&[(&[(0, 1.0), (1, 1.0)], 1), (&[(0, 3.0)], 0)], 2);
        assert_eq!(p.smoothness(), 2.25);
        let q = FiniteSumProblem::quadratic(vec![QuadraticComponent {
            hessian: vec![2.0, 0.0, 0.0, 5.0],
            linear: vec![0.0, 0.0],
            constant: 0.0,
        }])
        .unwrap();
        assert_relative_eq!(q.smoothness(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(q.strong_convexity(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn errors_on_bad_index_and_dimension() {
        let p = single_entry(1.0);
        assert_eq!(
            p.component_value(1, &[0.0; 4]),
            Err(ProblemError::IndexOutOfRange { index: 1, n: 1 })
        );
        assert_eq!(
            p.component_gradient(0, &[0.0; 3]),
            Err(ProblemError::DimensionMismatch { expected: 4, got: 3 })
        );
    }

    #[test]
    fn rejects_invalid_data() {
        assert!(LabeledExample::new(vec![(2, 1.0), (1, 1.0)], 1).is_err());
        assert!(LabeledExample::new(vec![], 2).is_err());
        assert!(MatrixCompletionData::new(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)], 1.0).is_err());
        assert!(MatrixCompletionData::new(2, 2, vec![(2, 0, 1.0)], 1.0).is_err());
        assert!(MatrixCompletionData::new(2, 2, vec![], 1.0).is_err());
        let ex = vec![LabeledExample::new(vec![(0, 0.0)], 1).unwrap()];
        assert!(FiniteSumProblem::logistic(ex, 1).is_err(), "L = 0 must be rejected");
        assert!(single_entry(1.0).with_strong_convexity(3.0).is_err());
    }

    #[test]
    fn full_value_is_mean_of_components() {
        let p = logistic(&[(&[(0, 1.0)], 1), (&[(1, -2.0)], 0), (&[(0, 0.5), (1, 0.5)], 1)], 2);
        let x = [0.3, -0.7];
        let mean = (0..3).map(|i| p.component_value(i, &x).unwrap()).sum::<f64>() / 3.0;
        assert_relative_eq!(p.value(&x).unwrap(), mean, max_relative = 1e-12 * 3.0);
    }

    #[test]
    fn mask_sizes_and_determinism() {
        assert_eq!(make_mask(2, 2, 1.0, 0).unwrap(), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let m = make_mask(10, 10, 0.7, 42).unwrap();
        assert_eq!(m.len(), 70);
        let mut dedup = m.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 70);
        assert_eq!(m, make_mask(10, 10, 0.7, 42).unwrap());
        assert!(make_mask(3, 3, 0.0, 1).is_err());
        assert!(make_mask(3, 3, 1.5, 1).is_err());
    }
}
