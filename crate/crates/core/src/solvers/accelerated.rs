//! Accelerated variance-reduced conditional gradient sliding.
//!
//! Each epoch anchors a full gradient (or full coordinate estimate) at the
//! snapshot `x̃`, then runs `T_s` inner steps that blend minibatch gradients
//! with the anchor, solve the prox subproblem inexactly with CondG, and
//! average the iterates with weights `θ_t` into the next snapshot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::schedule::{schedule_convex, schedule_strongly_convex, EpochSchedule, ZoGammaRule};
use super::{
    check_dims, sample_batch, solve_subproblem, start_point, variance_reduced, GradSource, Mode, SolverError,
    SolverOutput,
};
use crate::condg::QuadSubproblem;
use crate::linalg::axpy;
use crate::lmo::FeasibleRegion;
use crate::oracles::{OracleCounters, SmoothingConfig};
use crate::problems::FiniteSum;
use crate::record::{Clock, RowFlag, RunRecord};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    #[default]
    Convex,
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArcsOptions {
    pub mode: Mode,
    pub convexity: Convexity,
    pub epochs: usize,
    /// Minibatch size; `None` means `min(256, n)`.
    pub batch: Option<usize>,
    pub seed: u64,
    /// Initial-gap constant; `None` uses `4·max(f(x₀), 0) + cLD²`.
    pub d0: Option<f64>,
    /// Smoothing radius; `None` uses `1e-5 · (1 + ‖x₀‖∞)`.
    pub mu: Option<f64>,
    /// Inner rows are recorded every `record_every` steps; 0 keeps only
    /// epoch boundaries.
    pub record_every: usize,
    pub x0: Option<Vec<f64>>,
    pub zo_gamma: ZoGammaRule,
    /// Build schedules with this mode's constants instead of `mode`'s.
    pub schedule_mode: Option<Mode>,
    pub condg_max_iters: Option<usize>,
    pub timing: bool,
}

impl Default for ArcsOptions {
    fn default() -> Self {
        Self {
            mode: Mode::FirstOrder,
            convexity: Convexity::Convex,
            epochs: 10,
            batch: None,
            seed: 0,
            d0: None,
            mu: None,
            record_every: 0,
            x0: None,
            zo_gamma: ZoGammaRule::Standard,
            schedule_mode: None,
            condg_max_iters: None,
            timing: false,
        }
    }
}

/// State carried across epochs.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x_epoch: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub rng: ChaCha8Rng,
    pub counters: OracleCounters,
}

/// `4·max(f(x₀), 0) + cLD²` with `c = 3` (first order) or `5`.
pub fn default_d0(f0: f64, l: f64, diameter: f64, mode: Mode) -> f64 {
    let c = match mode {
        Mode::FirstOrder => 3.0,
        Mode::ZerothOrder => 5.0,
    };
    4.0 * f0.max(0.0) + c * l * diameter * diameter
}

/// Builds the epoch-`s` schedule a run with these options would use.
pub fn epoch_schedule<P: FiniteSum + ?Sized>(
    problem: &P,
    opts: &ArcsOptions,
    s: usize,
    d0: f64,
) -> Result<EpochSchedule, SolverError> {
    let n = problem.num_components();
    let l = problem.smoothness();
    let mode = opts.schedule_mode.unwrap_or(opts.mode);
    Ok(match opts.convexity {
        Convexity::Convex => schedule_convex(n, l, s, d0, mode)?,
        Convexity::StronglyConvex => {
            schedule_strongly_convex(n, l, problem.strong_convexity(), s, d0, mode, opts.zo_gamma)?
        }
    })
}

pub fn arcs_run<P: FiniteSum + ?Sized>(
    problem: &P,
    region: &FeasibleRegion,
    opts: &ArcsOptions,
) -> Result<(SolverState, SolverOutput), SolverError> {
    check_dims(problem, region)?;
    if opts.epochs == 0 {
        return Err(SolverError::Invalid("epochs must be at least 1".into()));
    }
    let n = problem.num_components();
    let b = opts.batch.unwrap_or(256.min(n));
    if b == 0 || b > n {
        return Err(SolverError::Invalid(format!("batch size {b} must lie in [1, n = {n}]")));
    }
    let tau = match opts.convexity {
        Convexity::Convex => 0.0,
        Convexity::StronglyConvex => {
            let t = problem.strong_convexity();
            if !(t > 0.0) {
                return Err(SolverError::Invalid("strongly convex schedule needs a positive modulus".into()));
            }
            t
        }
    };
    let x0 = start_point(region, opts.x0.as_ref())?;
    let smoothing = match opts.mu {
        Some(mu) => SmoothingConfig::new(mu)?,
        None => SmoothingConfig::default_for(&x0),
    };
    let source = GradSource::new(opts.mode, smoothing);
    let f0 = problem.value(&x0)?;
    let d0 = match opts.d0 {
        Some(d) if d > 0.0 && d.is_finite() => d,
        Some(d) => return Err(SolverError::Invalid(format!("D0 must be positive, got {d}"))),
        None => default_d0(f0, problem.smoothness(), region.diameter(), opts.schedule_mode.unwrap_or(opts.mode)),
    };

    let clock = Clock::new(opts.timing);
    let mut record = RunRecord::new("arcs");
    let mut state = SolverState {
        x_epoch: x0.clone(),
        x_tilde: x0,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        counters: OracleCounters::new(),
    };
    record.push(0, 0, state.counters, clock.elapsed_ns(), f0, RowFlag::Ok);

    for s in 1..=opts.epochs {
        let sc = epoch_schedule(problem, opts, s, d0)?;
        let (alpha, p, gamma) = (sc.alpha, sc.p, sc.gamma);
        let keep = 1.0 - alpha - p;
        let c = 1.0 + tau * gamma;
        let denom = 1.0 + tau * gamma * (1.0 - alpha);
        let w_bar = c * keep / denom;
        let w_x = alpha / denom;
        let w_tilde = c * p / denom;

        let x_tilde = state.x_tilde.clone();
        let anchor = source.full(problem, &x_tilde, &mut state.counters)?;
        let mut x = state.x_epoch.clone();
        let mut x_bar = x_tilde.clone();
        let mut acc = vec![0.0; x.len()];
        let mut theta_sum = 0.0;
        let mut flagged = false;

        for t in 1..=sc.t_len {
            let x_under: Vec<f64> = (0..x.len())
                .map(|k| w_bar * x_bar[k] + w_x * x[k] + w_tilde * x_tilde[k])
                .collect();
            let batch = sample_batch(&mut state.rng, n, b);
            let g = variance_reduced(source, problem, &batch, &x_under, &x_tilde, &anchor, &mut state.counters)?;
            let q = QuadSubproblem::new(g, x, x_under, gamma, tau)?;
            let (next, soft) =
                solve_subproblem(&q, region, sc.eta[t - 1], opts.condg_max_iters, &mut state.counters, &mut record)?;
            flagged |= soft;
            x = next;
            for k in 0..x.len() {
                x_bar[k] = keep * x_bar[k] + alpha * x[k] + p * x_tilde[k];
            }
            let theta = sc.theta[t - 1];
            axpy(theta, &x_bar, &mut acc);
            theta_sum += theta;

            if opts.record_every > 0 && t % opts.record_every == 0 && t < sc.t_len {
                let flag = if flagged { RowFlag::CondgSoftFail } else { RowFlag::Ok };
                record.push(s as u64, t as u64, state.counters, clock.elapsed_ns(), problem.value(&x_bar)?, flag);
                flagged = false;
            }
        }

        state.x_epoch = x;
        state.x_tilde = acc.into_iter().map(|v| v / theta_sum).collect();
        let flag = if flagged { RowFlag::CondgSoftFail } else { RowFlag::Ok };
        let obj = problem.value(&state.x_tilde)?;
        record.push(s as u64, sc.t_len as u64, state.counters, clock.elapsed_ns(), obj, flag);
    }

    record.final_point = state.x_tilde.clone();
    let out = SolverOutput { point: state.x_tilde.clone(), counters: state.counters, record };
    Ok((state, out))
}
