//! Counted access to a finite-sum objective.
//!
//! The gradient query oracle (GQO) returns one component gradient, the
//! function query oracle (FQO) one component value. The linear oracle (LO)
//! lives in [`crate::lmo`] and charges the same counters. Zeroth-order
//! methods replace gradients by the coordinate-wise central-difference
//! estimator, which costs `2d` function queries per component.

use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::problems::{FiniteSum, ProblemError};

/// Monotone oracle-call tallies for one run.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OracleCounters {
    pub gqo: u64,
    pub fqo: u64,
    pub lo: u64,
}

impl OracleCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merge(&mut self, other: OracleCounters) {
        *self += other;
    }
}

impl Add for OracleCounters {
    type Output = OracleCounters;

    fn add(self, rhs: Self) -> Self {
        OracleCounters { gqo: self.gqo + rhs.gqo, fqo: self.fqo + rhs.fqo, lo: self.lo + rhs.lo }
    }
}

impl AddAssign for OracleCounters {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Difference of two snapshots of the same counters (`later - earlier`).
impl Sub for OracleCounters {
    type Output = OracleCounters;

    fn sub(self, rhs: Self) -> Self {
        OracleCounters { gqo: self.gqo - rhs.gqo, fqo: self.fqo - rhs.fqo, lo: self.lo - rhs.lo }
    }
}

/// Smoothing radius `μ` of the coordinate-wise estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    mu: f64,
}

impl SmoothingConfig {
    pub fn new(mu: f64) -> Result<Self, ProblemError> {
        if mu > 0.0 && mu.is_finite() {
            Ok(Self { mu })
        } else {
            Err(ProblemError::Invalid(format!("smoothing parameter {mu} must be positive and finite")))
        }
    }

    /// `μ = 1e-5 · (1 + ‖x0‖∞)`.
    pub fn default_for(x0: &[f64]) -> Self {
        Self { mu: 1e-5 * (1.0 + crate::linalg::norm_inf(x0)) }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `∇f_i(x)`; one GQO.
pub fn gqo<P: FiniteSum + ?Sized>(
    problem: &P,
    i: usize,
    x: &[f64],
    counters: &mut OracleCounters,
) -> Result<Vec<f64>, ProblemError> {
    let g = problem.component_gradient(i, x)?;
    counters.gqo += 1;
    Ok(g)
}

/// `out += weight · ∇f_i(x)`; one GQO. Allocation-free variant of [`gqo`].
pub fn gqo_accumulate<P: FiniteSum + ?Sized>(
    problem: &P,
    i: usize,
    x: &[f64],
    weight: f64,
    out: &mut [f64],
    counters: &mut OracleCounters,
) -> Result<(), ProblemError> {
    problem.add_component_gradient(i, x, weight, out)?;
    counters.gqo += 1;
    Ok(())
}

/// `f_i(x)`; one FQO.
pub fn fqo<P: FiniteSum + ?Sized>(
    problem: &P,
    i: usize,
    x: &[f64],
    counters: &mut OracleCounters,
) -> Result<f64, ProblemError> {
    let v = problem.component_value(i, x)?;
    counters.fqo += 1;
    Ok(v)
}

/// `out += weight · Σ_k [f_i(x + μe_k) − f_i(x − μe_k)] / (2μ) · e_k`;
/// `2d` FQOs.
pub fn coord_estimate_accumulate<P: FiniteSum + ?Sized>(
    problem: &P,
    i: usize,
    x: &[f64],
    cfg: SmoothingConfig,
    weight: f64,
    out: &mut [f64],
    counters: &mut OracleCounters,
) -> Result<(), ProblemError> {
    let d = problem.dim();
    if x.len() != d {
        return Err(ProblemError::DimensionMismatch { expected: d, got: x.len() });
    }
    if out.len() != d {
        return Err(ProblemError::DimensionMismatch { expected: d, got: out.len() });
    }
    let mu = cfg.mu;
    let mut probe = x.to_vec();
    for k in 0..d {
        let xk = x[k];
        probe[k] = xk + mu;
        let plus = fqo(problem, i, &probe, counters)?;
        probe[k] = xk - mu;
        let minus = fqo(problem, i, &probe, counters)?;
        probe[k] = xk;
        out[k] += weight * (plus - minus) / (2.0 * mu);
    }
    Ok(())
}

pub fn coord_estimate<P: FiniteSum + ?Sized>(
    problem: &P,
    i: usize,
    x: &[f64],
    cfg: SmoothingConfig,
    counters: &mut OracleCounters,
) -> Result<Vec<f64>, ProblemError> {
    let mut g = vec![0.0; problem.dim()];
    coord_estimate_accumulate(problem, i, x, cfg, 1.0, &mut g, counters)?;
    Ok(g)
}

/// Mean of all component gradients; `n` GQOs.
pub fn full_gradient<P: FiniteSum + ?Sized>(
    problem: &P,
    x: &[f64],
    counters: &mut OracleCounters,
) -> Result<Vec<f64>, ProblemError> {
    let n = problem.num_components();
    let w = 1.0 / n as f64;
    let mut g = vec![0.0; problem.dim()];
    for i in 0..n {
        gqo_accumulate(problem, i, x, w, &mut g, counters)?;
    }
    Ok(g)
}

/// Mean of the per-component coordinate estimates; `2dn` FQOs.
pub fn full_coord_estimate<P: FiniteSum + ?Sized>(
    problem: &P,
    x: &[f64],
    cfg: SmoothingConfig,
    counters: &mut OracleCounters,
) -> Result<Vec<f64>, ProblemError> {
    let n = problem.num_components();
    let w = 1.0 / n as f64;
    let mut g = vec![0.0; problem.dim()];
    for i in 0..n {
        coord_estimate_accumulate(problem, i, x, cfg, w, &mut g, counters)?;
    }
    Ok(g)
}
