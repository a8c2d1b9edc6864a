//! Inner conditional-gradient solver for the prox-type subproblem
//!
//! ```text
//! h(x) = γ [⟨g, x⟩ + τ/2 ‖x − y‖²] + ½ ‖x − u‖²
//! ```
//!
//! run from `x = u` until the Frank-Wolfe gap `⟨∇h(x), x − v⟩` drops to `η`.
//! Since `h` is a quadratic with Hessian `(1 + γτ) I`, the step along
//! `v − x` is found exactly. The start point `u` is used as given, even if
//! infeasible; every caller in this crate passes a feasible one.

use thiserror::Error;

use crate::linalg::{dist_sq, dot};
use crate::lmo::{FeasibleRegion, LmoError};
use crate::oracles::OracleCounters;

/// Absolute slack added to `η` in the termination test.
pub const GAP_SLACK: f64 = 1e-14;

/// Hard ceiling on the default iteration budget.
pub const MAX_ITERS_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSubproblem {
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub gamma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondGResult {
    pub point: Vec<f64>,
    pub lo_calls: u64,
    pub final_gap: f64,
    /// Line-search updates performed.
    pub iterations: u64,
    /// Largest singular-pair residual reported by the oracle, if any.
    pub lo_residual: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CondGError {
    #[error("subproblem vectors have inconsistent dimensions")]
    DimensionMismatch,
    #[error("invalid subproblem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lmo(#[from] LmoError),
    /// Budget exhausted; `best` is the last iterate (lowest `h` by descent).
    #[error("gap {} still above tolerance after {} oracle calls", .best.final_gap, .best.lo_calls)]
    MaxIters { best: CondGResult },
}

impl QuadSubproblem {
    pub fn new(g: Vec<f64>, u: Vec<f64>, y: Vec<f64>, gamma: f64, tau: f64) -> Result<Self, CondGError> {
        if g.len() != u.len() || g.len() != y.len() {
            return Err(CondGError::DimensionMismatch);
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !(tau >= 0.0 && tau.is_finite()) {
            return Err(CondGError::Invalid(format!("need gamma > 0 and tau >= 0, got {gamma}, {tau}")));
        }
        Ok(Self { g, u, y, gamma, tau })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Curvature of `h` along any unit direction.
    pub fn modulus(&self) -> f64 {
        1.0 + self.gamma * self.tau
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.gamma * (dot(&self.g, x) + 0.5 * self.tau * dist_sq(x, &self.y)) + 0.5 * dist_sq(x, &self.u)
    }

    /// `γ (g + τ (x − y)) + (x − u)`
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, CondGError> {
        if x.len() != self.dim() {
            return Err(CondGError::DimensionMismatch);
        }
        let mut out = Vec::with_capacity(x.len());
        self.grad_into(x, &mut out);
        Ok(out)
    }

    fn grad_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let (gm, gt) = (self.gamma, self.gamma * self.tau);
        out.extend((0..x.len()).map(|k| gm * self.g[k] + gt * (x[k] - self.y[k]) + (x[k] - self.u[k])));
    }
}

pub fn grad_h(q: &QuadSubproblem, x: &[f64]) -> Result<Vec<f64>, CondGError> {
    q.grad(x)
}

/// `(⟨∇h(x), x − v⟩, v)` with `v = lmo(∇h(x))`; one LO call.
pub fn fw_gap(
    q: &QuadSubproblem,
    x: &[f64],
    region: &FeasibleRegion,
    counters: &mut OracleCounters,
) -> Result<(f64, Vec<f64>), CondGError> {
    let grad = q.grad(x)?;
    let v = region.lmo(&grad, counters)?;
    Ok((gap_of(&grad, x, &v), v))
}

fn gap_of(grad: &[f64], x: &[f64], v: &[f64]) -> f64 {
    grad.iter().zip(x.iter().zip(v)).map(|(g, (a, b))| g * (a - b)).sum()
}

fn beta_of(grad: &[f64], x: &[f64], v: &[f64], modulus: f64) -> f64 {
    let dd = dist_sq(x, v);
    if dd == 0.0 {
        return 0.0;
    }
    (gap_of(grad, x, v) / (modulus * dd)).clamp(0.0, 1.0)
}

/// Exact minimizer of `β ↦ h((1 − β) x + β v)` over `[0, 1]`.
pub fn linesearch_beta(q: &QuadSubproblem, x: &[f64], v: &[f64]) -> Result<f64, CondGError> {
    if v.len() != x.len() {
        return Err(CondGError::DimensionMismatch);
    }
    let grad = q.grad(x)?;
    Ok(beta_of(&grad, x, v, q.modulus()))
}

/// `10 · ⌈(1 + γτ) D² / η⌉`, capped at [`MAX_ITERS_CAP`].
pub fn default_max_iters(q: &QuadSubproblem, diameter: f64, eta: f64) -> usize {
    let raw = 10.0 * (q.modulus() * diameter * diameter / eta).ceil();
    if raw.is_finite() && raw < MAX_ITERS_CAP as f64 {
        (raw as usize).max(1)
    } else {
        MAX_ITERS_CAP
    }
}

/// Runs Frank-Wolfe on `h` until the gap is at most `η`. `max_iters` bounds
/// the number of LO calls; `None` uses [`default_max_iters`].
pub fn condg_solve(
    q: &QuadSubproblem,
    region: &FeasibleRegion,
    eta: f64,
    max_iters: Option<usize>,
    counters: &mut OracleCounters,
) -> Result<CondGResult, CondGError> {
    if q.dim() != region.dim() {
        return Err(CondGError::DimensionMismatch);
    }
    if !(eta > 0.0) {
        return Err(CondGError::Invalid(format!("eta must be positive, got {eta}")));
    }
    let budget = max_iters.unwrap_or_else(|| default_max_iters(q, region.diameter(), eta)).max(1);
    let modulus = q.modulus();
    let mut x = q.u.clone();
    let mut grad = Vec::with_capacity(x.len());
    let mut lo_calls = 0u64;
    let mut lo_residual: Option<f64> = None;
    let mut gap = f64::INFINITY;
    let mut iterations = 0u64;
    while (lo_calls as usize) < budget {
        q.grad_into(&x, &mut grad);
        let out = region.lmo_detailed(&grad, counters)?;
        lo_calls += 1;
        if let Some(r) = out.residual {
            lo_residual = Some(lo_residual.map_or(r, |m: f64| m.max(r)));
        }
        let v = out.vertex;
        gap = gap_of(&grad, &x, &v);
        if gap <= eta + GAP_SLACK {
            return Ok(CondGResult { point: x, lo_calls, final_gap: gap, iterations, lo_residual });
        }
        let beta = beta_of(&grad, &x, &v, modulus);
        for (xk, vk) in x.iter_mut().zip(&v) {
            *xk += beta * (vk - *xk);
        }
        iterations += 1;
    }
    Err(CondGError::MaxIters { best: CondGResult { point: x, lo_calls, final_gap: gap, iterations, lo_residual } })
}
