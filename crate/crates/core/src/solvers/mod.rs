//! Solvers: the accelerated variance-reduced sliding method ([`accelerated`]) and
//! the baselines CG, CGS, SCGS and STORC.
//!
//! Every run is single-threaded and deterministic given its options. Runs
//! own their counters and report them alongside a [`RunRecord`].

pub mod accelerated;
pub mod cg;
pub mod cgs;
pub mod schedule;
pub mod storc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condg::{condg_solve, CondGError, QuadSubproblem};
use crate::lmo::{FeasibleRegion, LmoError};
use crate::oracles::{self, OracleCounters, SmoothingConfig};
use crate::problems::{FiniteSum, ProblemError};
use crate::record::RunRecord;

pub use accelerated::{arcs_run, ArcsOptions, Convexity, SolverState};
pub use cg::{cg_run, CgOptions, StepRule};
pub use cgs::{cgs_run, scgs_run, CgsOptions, CgsSchedule, MomentumRule, ScgsOptions};
pub use schedule::{
    schedule_convex, schedule_strongly_convex, EpochSchedule, HypothesisCheck, ScheduleError, ZoGammaRule,
};
pub use storc::{storc_run, StorcCase, StorcOptions};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    FirstOrder,
    ZerothOrder,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Lmo(#[from] LmoError),
    #[error(transparent)]
    CondG(#[from] CondGError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("invalid options: {0}")]
    Invalid(String),
}

/// Final iterate, counters and trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub point: Vec<f64>,
    pub counters: OracleCounters,
    pub record: RunRecord,
}

/// Component-gradient access in either oracle mode.
#[derive(Debug, Clone, Copy)]
pub(crate) enum GradSource {
    Exact,
    Coordinate(SmoothingConfig),
}

impl GradSource {
    pub(crate) fn new(mode: Mode, smoothing: SmoothingConfig) -> Self {
        match mode {
            Mode::FirstOrder => GradSource::Exact,
            Mode::ZerothOrder => GradSource::Coordinate(smoothing),
        }
    }

    pub(crate) fn accumulate<P: FiniteSum + ?Sized>(
        &self,
        problem: &P,
        i: usize,
        x: &[f64],
        weight: f64,
        out: &mut [f64],
        counters: &mut OracleCounters,
    ) -> Result<(), ProblemError> {
        match self {
            GradSource::Exact => oracles::gqo_accumulate(problem, i, x, weight, out, counters),
            GradSource::Coordinate(cfg) => {
                oracles::coord_estimate_accumulate(problem, i, x, *cfg, weight, out, counters)
            }
        }
    }

    pub(crate) fn full<P: FiniteSum + ?Sized>(
        &self,
        problem: &P,
        x: &[f64],
        counters: &mut OracleCounters,
    ) -> Result<Vec<f64>, ProblemError> {
        match self {
            GradSource::Exact => oracles::full_gradient(problem, x, counters),
            GradSource::Coordinate(cfg) => oracles::full_coord_estimate(problem, x, *cfg, counters),
        }
    }
}

/// `out = anchor + (1/|batch|) Σ_{i ∈ batch} [∇f_i(x) − ∇f_i(x̃)]`.
pub(crate) fn variance_reduced<P: FiniteSum + ?Sized>(
    source: GradSource,
    problem: &P,
    batch: &[usize],
    x: &[f64],
    x_tilde: &[f64],
    anchor: &[f64],
    counters: &mut OracleCounters,
) -> Result<Vec<f64>, ProblemError> {
    let mut g = anchor.to_vec();
    let w = 1.0 / batch.len() as f64;
    for &i in batch {
        source.accumulate(problem, i, x, w, &mut g, counters)?;
        source.accumulate(problem, i, x_tilde, -w, &mut g, counters)?;
    }
    Ok(g)
}

/// `b` indices drawn uniformly with replacement.
pub(crate) fn sample_batch(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Vec<usize> {
    (0..b).map(|_| rng.random_range(0..n)).collect()
}

/// Solves the subproblem; on budget exhaustion keeps the best point and
/// reports `true` (soft failure).
pub(crate) fn solve_subproblem(
    q: &QuadSubproblem,
    region: &FeasibleRegion,
    eta: f64,
    max_iters: Option<usize>,
    counters: &mut OracleCounters,
    record: &mut RunRecord,
) -> Result<(Vec<f64>, bool), SolverError> {
    match condg_solve(q, region, eta, max_iters, counters) {
        Ok(r) => {
            record.note_residual(r.lo_residual);
            Ok((r.point, false))
        }
        Err(CondGError::MaxIters { best }) => {
            record.note_residual(best.lo_residual);
            record.soft_failures += 1;
            Ok((best.point, true))
        }
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn start_point(
    region: &FeasibleRegion,
    x0: Option<&Vec<f64>>,
) -> Result<Vec<f64>, SolverError> {
    let x = x0.cloned().unwrap_or_else(|| region.start_point());
    if !region.contains(&x, 1e-9) {
        return Err(SolverError::Invalid("initial point is not feasible".into()));
    }
    Ok(x)
}

pub(crate) fn check_dims<P: FiniteSum + ?Sized>(problem: &P, region: &FeasibleRegion) -> Result<(), SolverError> {
    if problem.dim() != region.dim() {
        return Err(SolverError::Invalid(format!(
            "problem dimension {} differs from region dimension {}",
            problem.dim(),
            region.dim()
        )));
    }
    Ok(())
}

/// Names accepted by the benchmark harness.
pub const SOLVER_NAMES: [&str; 5] = ["arcs", "cg", "cgs", "scgs", "storc"];
