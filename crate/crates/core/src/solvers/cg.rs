//! Plain conditional gradient (Frank-Wolfe) with full gradients.

use serde::{Deserialize, Serialize};

use super::{check_dims, start_point, SolverError, SolverOutput};
use crate::linalg::{dot, norm_sq};
use crate::lmo::FeasibleRegion;
use crate::oracles::{full_gradient, OracleCounters};
use crate::problems::FiniteSum;
use crate::record::{Clock, RowFlag, RunRecord};

#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `γ_s = 2/(s + 2)`.
    #[default]
    OpenLoop,
    /// Exact minimizer along `v − x`; objectives with constant Hessian only.
    ExactLineSearch,
    /// Backtracking on a local smoothness estimate; each trial value costs
    /// `n` function queries.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgOptions {
    pub steps: usize,
    pub step_rule: StepRule,
    pub x0: Option<Vec<f64>>,
    /// Stop early once the Frank-Wolfe gap `⟨∇f(x), x − v⟩` is at most this.
    pub gap_tol: f64,
    pub record_every: usize,
    pub timing: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { steps: 100, step_rule: StepRule::OpenLoop, x0: None, gap_tol: 0.0, record_every: 1, timing: false }
    }
}

/// Output of [`cg_run`] plus the last observed Frank-Wolfe gap.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutput {
    pub output: SolverOutput,
    pub last_gap: f64,
    pub steps_taken: usize,
}

fn full_value<P: FiniteSum + ?Sized>(problem: &P, x: &[f64], counters: &mut OracleCounters) -> Result<f64, SolverError> {
    let v = problem.value(x)?;
    counters.fqo += problem.num_components() as u64;
    Ok(v)
}

pub fn cg_run<P: FiniteSum + ?Sized>(
    problem: &P,
    region: &FeasibleRegion,
    opts: &CgOptions,
) -> Result<CgOutput, SolverError> {
    check_dims(problem, region)?;
    let mut x = start_point(region, opts.x0.as_ref())?;
    if opts.step_rule == StepRule::ExactLineSearch && problem.curvature(&x).is_none() {
        return Err(SolverError::Invalid("exact line search needs a constant-Hessian objective".into()));
    }
    let clock = Clock::new(opts.timing);
    let mut counters = OracleCounters::new();
    let mut record = RunRecord::new("cg");
    let mut fx = problem.value(&x)?;
    record.push(0, 0, counters, clock.elapsed_ns(), fx, RowFlag::Ok);
    let mut l_est = problem.smoothness();
    let mut last_gap = f64::INFINITY;
    let mut steps_taken = 0;

    for s in 1..=opts.steps {
        let g = full_gradient(problem, &x, &mut counters)?;
        let out = region.lmo_detailed(&g, &mut counters)?;
        record.note_residual(out.residual);
        let v = out.vertex;
        let d: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope = dot(&g, &d);
        last_gap = -slope;
        if last_gap <= opts.gap_tol {
            break;
        }
        let dd = norm_sq(&d);
        let step = match opts.step_rule {
            StepRule::OpenLoop => 2.0 / (s as f64 + 2.0),
            StepRule::ExactLineSearch => {
                let curv = problem.curvature(&d).unwrap_or(0.0);
                if curv > 0.0 {
                    (-slope / curv).clamp(0.0, 1.0)
                } else {
                    1.0
                }
            }
            StepRule::Adaptive => {
                let f_here = full_value(problem, &x, &mut counters)?;
                let mut m = 0.9 * l_est;
                loop {
                    let step = (-slope / (m * dd)).clamp(0.0, 1.0);
                    let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                    let f_trial = full_value(problem, &trial, &mut counters)?;
                    if f_trial <= f_here + step * slope + 0.5 * step * step * m * dd || m > 1e12 * l_est {
                        l_est = m;
                        break step;
                    }
                    m *= 2.0;
                }
            }
        };
        for (xk, dk) in x.iter_mut().zip(&d) {
            *xk += step * dk;
        }
        steps_taken = s;
        if opts.record_every > 0 && (s % opts.record_every == 0 || s == opts.steps) {
            fx = problem.value(&x)?;
            record.push(s as u64, 0, counters, clock.elapsed_ns(), fx, RowFlag::Ok);
        }
    }
    record.final_point = x.clone();
    Ok(CgOutput { output: SolverOutput { point: x, counters, record }, last_gap, steps_taken })
}
