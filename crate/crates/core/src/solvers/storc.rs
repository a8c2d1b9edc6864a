//! Stochastic variance-reduced conditional gradient sliding (STORC).
//!
//! Parameters: `α_{s,t} = 2/(t+1)`, `γ_{s,t} = t/(3L)`, `η_{s,t} = 2D_s²/(3T_s)`.
//!
//! * smooth case: `T_s = ⌈2^{s/2+2}⌉`, `m_{s,t} = 900 T_s`, `D_s = D`;
//! * strongly convex case: `T_s = ⌈√(32L/τ)⌉`, `m_{s,t} = 5600 T_s L/τ`,
//!   `D_s² = L D² / (τ 2^{s−1})`.
//!
//! Batch sizes are multiplied by `batch_scale` and rounded up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_dims, sample_batch, solve_subproblem, start_point, variance_reduced, GradSource, SolverError, SolverOutput,
};
use crate::condg::QuadSubproblem;
use crate::lmo::FeasibleRegion;
use crate::oracles::{full_gradient, OracleCounters};
use crate::problems::FiniteSum;
use crate::record::{Clock, RowFlag, RunRecord};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorcCase {
    /// Optimum with vanishing gradient.
    #[default]
    Smooth,
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorcOptions {
    pub case: StorcCase,
    pub epochs: usize,
    /// Multiplier `ρ ∈ (0, 1]` on every `m_{s,t}`.
    pub batch_scale: f64,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub condg_max_iters: Option<usize>,
    pub record_every: usize,
    pub timing: bool,
}

impl Default for StorcOptions {
    fn default() -> Self {
        Self {
            case: StorcCase::Smooth,
            epochs: 5,
            batch_scale: 1.0,
            seed: 0,
            x0: None,
            condg_max_iters: None,
            record_every: 0,
            timing: false,
        }
    }
}

/// Epoch-level STORC parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorcEpoch {
    pub t_len: usize,
    pub batch: usize,
    pub ds_sq: f64,
}

pub fn storc_epoch(case: StorcCase, s: usize, l: f64, tau: f64, diam: f64, scale: f64) -> StorcEpoch {
    let (t_len, raw_batch, ds_sq) = match case {
        StorcCase::Smooth => {
            let t = 2f64.powf(s as f64 / 2.0 + 2.0).ceil();
            (t as usize, 900.0 * t, diam * diam)
        }
        StorcCase::StronglyConvex => {
            let t = (32.0 * l / tau).sqrt().ceil();
            (t as usize, 5600.0 * t * l / tau, l * diam * diam / (tau * 2f64.powi(s as i32 - 1)))
        }
    };
    StorcEpoch { t_len, batch: ((scale * raw_batch).ceil() as usize).max(1), ds_sq }
}

pub fn storc_run<P: FiniteSum + ?Sized>(
    problem: &P,
    region: &FeasibleRegion,
    opts: &StorcOptions,
) -> Result<SolverOutput, SolverError> {
    check_dims(problem, region)?;
    if !(opts.batch_scale > 0.0 && opts.batch_scale <= 1.0) {
        return Err(SolverError::Invalid(format!("batch scale {} must lie in (0, 1]", opts.batch_scale)));
    }
    let tau = problem.strong_convexity();
    if opts.case == StorcCase::StronglyConvex && !(tau > 0.0) {
        return Err(SolverError::Invalid("strongly convex case needs a positive modulus".into()));
    }
    let n = problem.num_components();
    let (l, diam) = (problem.smoothness(), region.diameter());
    let zero = vec![0.0; problem.dim()];
    let mut x_tilde = start_point(region, opts.x0.as_ref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let clock = Clock::new(opts.timing);
    let mut counters = OracleCounters::new();
    let mut record = RunRecord::new("storc");
    record.push(0, 0, counters, clock.elapsed_ns(), problem.value(&x_tilde)?, RowFlag::Ok);

    for s in 1..=opts.epochs {
        let ep = storc_epoch(opts.case, s, l, tau, diam, opts.batch_scale);
        let eta = 2.0 * ep.ds_sq / (3.0 * ep.t_len as f64);
        let anchor = full_gradient(problem, &x_tilde, &mut counters)?;
        let mut x = x_tilde.clone();
        let mut x_bar = x_tilde.clone();
        let mut flagged = false;
        for t in 1..=ep.t_len {
            let alpha = 2.0 / (t as f64 + 1.0);
            let gamma = t as f64 / (3.0 * l);
            let x_under: Vec<f64> = x_bar.iter().zip(&x).map(|(b, a)| (1.0 - alpha) * b + alpha * a).collect();
            let batch = sample_batch(&mut rng, n, ep.batch);
            let g = variance_reduced(GradSource::Exact, problem, &batch, &x_under, &x_tilde, &anchor, &mut counters)?;
            let q = QuadSubproblem::new(g, x, zero.clone(), gamma, 0.0)?;
            let (next, soft) = solve_subproblem(&q, region, eta, opts.condg_max_iters, &mut counters, &mut record)?;
            flagged |= soft;
            x = next;
            for (b, a) in x_bar.iter_mut().zip(&x) {
                *b = (1.0 - alpha) * *b + alpha * a;
            }
            if opts.record_every > 0 && t % opts.record_every == 0 && t < ep.t_len {
                let flag = if flagged { RowFlag::CondgSoftFail } else { RowFlag::Ok };
                record.push(s as u64, t as u64, counters, clock.elapsed_ns(), problem.value(&x_bar)?, flag);
                flagged = false;
            }
        }
        x_tilde = x_bar;
        let flag = if flagged { RowFlag::CondgSoftFail } else { RowFlag::Ok };
        record.push(s as u64, ep.t_len as u64, counters, clock.elapsed_ns(), problem.value(&x_tilde)?, flag);
    }
    record.final_point = x_tilde.clone();
    Ok(SolverOutput { point: x_tilde, counters, record })
}
