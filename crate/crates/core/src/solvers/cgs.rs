//! Conditional gradient sliding and its stochastic variant.
//!
//! ```text
//! z = (1 − α_s) y + α_s x
//! x = CondG(G_s, x, 0, γ_s, 0, η_s)
//! y = (1 − α_s) y + α_s x
//! ```
//!
//! with `G_s = ∇f(z)` for CGS and a minibatch average at `z` for SCGS.
//! Default schedules follow Lan and Zhou's analysis, rewritten for the
//! `γ`-scaled subproblem used here:
//!
//! | rule  | `α_s`       | `γ_s`          | `η_s`                    |
//! |-------|-------------|----------------|--------------------------|
//! | CGS   | `3/(s+2)`   | `(s+1)/(3L)`   | `D²/(3s)`                |
//! | SCGS  | `3/(s+2)`   | `(s+2)/(4L)`   | `(s+2)D²/(4s(s+1))`      |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, sample_batch, solve_subproblem, start_point, SolverError, SolverOutput};
use crate::condg::QuadSubproblem;
use crate::lmo::FeasibleRegion;
use crate::oracles::{full_gradient, gqo_accumulate, OracleCounters};
use crate::problems::FiniteSum;
use crate::record::{Clock, RowFlag, RunRecord};

#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum MomentumRule {
    /// `α_s = 3/(s + 2)`.
    #[default]
    Standard,
    Constant { alpha: f64 },
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgsSchedule {
    #[default]
    Cgs,
    Scgs,
}

impl CgsSchedule {
    /// `(γ_s, η_s)` for smoothness `l` and diameter `diam`.
    pub fn params(&self, s: usize, l: f64, diam: f64) -> (f64, f64) {
        let s = s as f64;
        let d2 = diam * diam;
        match self {
            CgsSchedule::Cgs => ((s + 1.0) / (3.0 * l), d2 / (3.0 * s)),
            CgsSchedule::Scgs => ((s + 2.0) / (4.0 * l), (s + 2.0) * d2 / (4.0 * s * (s + 1.0))),
        }
    }
}

impl MomentumRule {
    pub fn alpha(&self, s: usize) -> f64 {
        match self {
            MomentumRule::Standard => 3.0 / (s as f64 + 2.0),
            MomentumRule::Constant { alpha } => *alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgsOptions {
    pub steps: usize,
    pub momentum: MomentumRule,
    pub schedule: CgsSchedule,
    pub x0: Option<Vec<f64>>,
    pub condg_max_iters: Option<usize>,
    pub record_every: usize,
    pub timing: bool,
}

impl Default for CgsOptions {
    fn default() -> Self {
        Self {
            steps: 50,
            momentum: MomentumRule::Standard,
            schedule: CgsSchedule::Cgs,
            x0: None,
            condg_max_iters: None,
            record_every: 1,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScgsOptions {
    pub steps: usize,
    /// Batch multiplier `c` in `m_s = min(⌈c (s+1)²⌉, n)`.
    pub batch_scale: f64,
    pub momentum: MomentumRule,
    pub schedule: CgsSchedule,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub condg_max_iters: Option<usize>,
    pub record_every: usize,
    pub timing: bool,
}

impl Default for ScgsOptions {
    fn default() -> Self {
        Self {
            steps: 50,
            batch_scale: 1.0,
            momentum: MomentumRule::Standard,
            schedule: CgsSchedule::Scgs,
            seed: 0,
            x0: None,
            condg_max_iters: None,
            record_every: 1,
            timing: false,
        }
    }
}

/// `min(⌈c (s+1)²⌉, n)`, at least 1.
pub fn scgs_batch(c: f64, s: usize, n: usize) -> usize {
    let raw = (c * ((s + 1) * (s + 1)) as f64).ceil();
    if raw >= n as f64 {
        n
    } else {
        (raw as usize).max(1)
    }
}

/// Shared sliding loop; `gradient(s, z, counters)` supplies `G_s`.
#[allow(clippy::too_many_arguments)]
fn sliding<P, G>(
    name: &str,
    problem: &P,
    region: &FeasibleRegion,
    steps: usize,
    momentum: MomentumRule,
    schedule: CgsSchedule,
    x0: Option<&Vec<f64>>,
    condg_max_iters: Option<usize>,
    record_every: usize,
    timing: bool,
    mut gradient: G,
) -> Result<SolverOutput, SolverError>
where
    P: FiniteSum + ?Sized,
    G: FnMut(usize, &[f64], &mut OracleCounters) -> Result<Vec<f64>, SolverError>,
{
    check_dims(problem, region)?;
    if let MomentumRule::Constant { alpha } = momentum {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SolverError::Invalid(format!("momentum {alpha} must lie in (0, 1]")));
        }
    }
    let mut x = start_point(region, x0)?;
    let mut y = x.clone();
    let zero = vec![0.0; x.len()];
    let (l, diam) = (problem.smoothness(), region.diameter());
    let clock = Clock::new(timing);
    let mut counters = OracleCounters::new();
    let mut record = RunRecord::new(name);
    record.push(0, 0, counters, clock.elapsed_ns(), problem.value(&y)?, RowFlag::Ok);
    let mut flagged = false;

    for s in 1..=steps {
        let alpha = momentum.alpha(s);
        let (gamma, eta) = schedule.params(s, l, diam);
        let z: Vec<f64> = y.iter().zip(&x).map(|(yk, xk)| (1.0 - alpha) * yk + alpha * xk).collect();
        let g = gradient(s, &z, &mut counters)?;
        let q = QuadSubproblem::new(g, x, zero.clone(), gamma, 0.0)?;
        let (next, soft) = solve_subproblem(&q, region, eta, condg_max_iters, &mut counters, &mut record)?;
        flagged |= soft;
        x = next;
        for (yk, xk) in y.iter_mut().zip(&x) {
            *yk = (1.0 - alpha) * *yk + alpha * xk;
        }
        if record_every > 0 && (s % record_every == 0 || s == steps) {
            let flag = if flagged { RowFlag::CondgSoftFail } else { RowFlag::Ok };
            record.push(s as u64, 0, counters, clock.elapsed_ns(), problem.value(&y)?, flag);
            flagged = false;
        }
    }
    record.final_point = y.clone();
    Ok(SolverOutput { point: y, counters, record })
}

pub fn cgs_run<P: FiniteSum + ?Sized>(
    problem: &P,
    region: &FeasibleRegion,
    opts: &CgsOptions,
) -> Result<SolverOutput, SolverError> {
    sliding(
        "cgs",
        problem,
        region,
        opts.steps,
        opts.momentum,
        opts.schedule,
        opts.x0.as_ref(),
        opts.condg_max_iters,
        opts.record_every,
        opts.timing,
        |_, z, c| Ok(full_gradient(problem, z, c)?),
    )
}

/// Stochastic sliding. When `m_s` reaches `n` the exact full gradient is
/// used, so a run whose batches all saturate matches [`cgs_run`].
pub fn scgs_run<P: FiniteSum + ?Sized>(
    problem: &P,
    region: &FeasibleRegion,
    opts: &ScgsOptions,
) -> Result<SolverOutput, SolverError> {
    if !(opts.batch_scale > 0.0 && opts.batch_scale.is_finite()) {
        return Err(SolverError::Invalid(format!("batch scale {} must be positive", opts.batch_scale)));
    }
    let n = problem.num_components();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    sliding(
        "scgs",
        problem,
        region,
        opts.steps,
        opts.momentum,
        opts.schedule,
        opts.x0.as_ref(),
        opts.condg_max_iters,
        opts.record_every,
        opts.timing,
        |s, z, c| {
            let m = scgs_batch(opts.batch_scale, s, n);
            if m == n {
                return Ok(full_gradient(problem, z, c)?);
            }
            let mut g = vec![0.0; z.len()];
            let w = 1.0 / m as f64;
            for i in sample_batch(&mut rng, n, m) {
                gqo_accumulate(problem, i, z, w, &mut g, c)?;
            }
            Ok(g)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::synthetic::QuadraticSpec;

    #[test]
    fn batch_sizes() {
        assert_eq!(scgs_batch(1.0, 3, 1000), 16);
        assert_eq!(scgs_batch(1.0, 3, 10), 10);
        assert_eq!(scgs_batch(0.01, 1, 10), 1);
        assert_eq!(scgs_batch(0.5, 2, 100), 5);
    }

    #[test]
    fn unit_momentum_tracks_x() {
        let p = QuadraticSpec::new(6, 3, 4).build().unwrap();
        let r = FeasibleRegion::l1_ball(3, 1.0).unwrap();
        let opts = CgsOptions { steps: 4, momentum: MomentumRule::Constant { alpha: 1.0 }, ..Default::default() };
        let out = cgs_run(&p, &r, &opts).unwrap();
        assert!(r.contains(&out.point, 1e-9));
        assert_eq!(out.counters.gqo, 4 * 6);
    }
}
