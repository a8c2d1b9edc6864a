//! Reference optimum `min_{y ∈ C} f(y)` for suboptimality columns.
//!
//! Accelerated projected gradient (with adaptive restart) runs first; if its
//! Frank-Wolfe gap is still above tolerance, conditional gradient with
//! exact line search (constant Hessian) or backtracking continues from the
//! best point. Oracle calls here use their own counters.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use arcs::linalg::{dot, norm_sq};
use arcs::{FeasibleRegion, FiniteSum, FiniteSumProblem, OracleCounters};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    pub gap_tol: f64,
    /// Linear-oracle budget of the conditional-gradient phase.
    pub max_lo: u64,
    /// Iteration budget of the projected-gradient phase.
    pub max_gradient_steps: u64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-10, max_lo: 1_000_000, max_gradient_steps: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOutcome {
    pub value: f64,
    pub point: Vec<f64>,
    /// Smallest Frank-Wolfe gap seen; an upper bound on `value − f*`.
    pub gap: f64,
    pub converged: bool,
    pub gradient_steps: u64,
    pub lo_calls: u64,
}

/// Euclidean projection onto the region.
pub fn project(region: &FeasibleRegion, x: &[f64]) -> Vec<f64> {
    match region {
        FeasibleRegion::L1Ball { radius, .. } => project_l1(x, *radius),
        FeasibleRegion::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).map(|(v, (a, b))| v.clamp(*a, *b)).collect(),
        FeasibleRegion::NuclearBall { rows, cols, radius, .. } => {
            let m = DMatrix::from_row_slice(*rows, *cols, x);
            let svd = m.svd(true, true);
            let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
            let shrunk = project_l1(&sigma, *radius);
            let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
            let mut out = DMatrix::zeros(*rows, *cols);
            for (k, s) in shrunk.iter().enumerate() {
                if *s > 0.0 {
                    out += *s * u.column(k) * vt.row(k);
                }
            }
            let mut flat = Vec::with_capacity(rows * cols);
            for r in 0..*rows {
                flat.extend(out.row(r).iter());
            }
            flat
        }
    }
}

/// Projection onto `{x : ‖x‖₁ ≤ r}` by sorting magnitudes.
pub fn project_l1(x: &[f64], r: f64) -> Vec<f64> {
    if x.iter().map(|v| v.abs()).sum::<f64>() <= r {
        return x.to_vec();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let (mut cum, mut theta) = (0.0, 0.0);
    for (k, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - r) / (k + 1) as f64;
        if *m > t {
            theta = t;
        } else {
            break;
        }
    }
    x.iter().map(|v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

fn fw_gap(region: &FeasibleRegion, x: &[f64], g: &[f64], counters: &mut OracleCounters) -> Result<f64, HarnessError> {
    let v = region.lmo(g, counters)?;
    Ok(x.iter().zip(&v).zip(g).map(|((a, b), gk)| gk * (a - b)).sum())
}

pub fn compute_reference_optimum(
    problem: &FiniteSumProblem,
    region: &FeasibleRegion,
    opts: &ReferenceOptions,
) -> Result<ReferenceOutcome, HarnessError> {
    let mut counters = OracleCounters::new();
    let l = problem.smoothness();
    let mut x = region.start_point();
    let mut best = (problem.value(&x)?, x.clone());
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut steps = 0u64;
    let mut gap = f64::INFINITY;

    let max_steps = if l > 0.0 { opts.max_gradient_steps } else { 0 };
    while steps < max_steps {
        let g = problem.gradient(&y)?;
        let step: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / l).collect();
        let x_new = project(region, &step);
        steps += 1;
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let diff: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let restart = y.iter().zip(&x_new).zip(&diff).map(|((a, b), d)| (a - b) * d).sum::<f64>() > 0.0;
        if restart {
            t = 1.0;
            y = x_new.clone();
        } else {
            let w = (t - 1.0) / t_new;
            y = x_new.iter().zip(&diff).map(|(a, d)| a + w * d).collect();
            t = t_new;
        }
        x = x_new;
        if steps % 25 == 0 || steps == max_steps || norm_sq(&diff) == 0.0 {
            let fx = problem.value(&x)?;
            if fx < best.0 {
                best = (fx, x.clone());
            }
            gap = fw_gap(region, &x, &problem.gradient(&x)?, &mut counters)?;
            if gap <= opts.gap_tol {
                break;
            }
            if norm_sq(&diff) == 0.0 {
                break;
            }
        }
    }

    if gap > opts.gap_tol {
        gap = polish_with_cg(problem, region, opts, &mut best, &mut counters)?;
    } else if problem.value(&x)? <= best.0 {
        best = (problem.value(&x)?, x);
    }
    Ok(ReferenceOutcome {
        value: best.0,
        point: best.1,
        gap,
        converged: gap <= opts.gap_tol,
        gradient_steps: steps,
        lo_calls: counters.lo,
    })
}

/// Conditional gradient from the current best point; returns the last gap.
fn polish_with_cg(
    problem: &FiniteSumProblem,
    region: &FeasibleRegion,
    opts: &ReferenceOptions,
    best: &mut (f64, Vec<f64>),
    counters: &mut OracleCounters,
) -> Result<f64, HarnessError> {
    let mut x = best.1.clone();
    let mut fx = best.0;
    let mut l_est = problem.smoothness();
    let mut gap = f64::INFINITY;
    while counters.lo < opts.max_lo {
        let g = problem.gradient(&x)?;
        let v = region.lmo(&g, counters)?;
        let d: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope = dot(&g, &d);
        gap = gap.min(-slope);
        if -slope <= opts.gap_tol {
            break;
        }
        let dd = norm_sq(&d);
        let step = match problem.curvature(&d) {
            Some(c) if c > 0.0 => (-slope / c).min(1.0),
            Some(_) => 1.0,
            None => {
                let mut m = 0.5 * l_est;
                loop {
                    let s = (-slope / (m * dd)).min(1.0);
                    let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                    if problem.value(&trial)? <= fx + s * slope + 0.5 * s * s * m * dd || m > 1e12 * l_est {
                        l_est = m;
                        break s;
                    }
                    m *= 2.0;
                }
            }
        };
        for (a, b) in x.iter_mut().zip(&d) {
            *a += step * b;
        }
        fx = problem.value(&x)?;
        if fx < best.0 {
            *best = (fx, x.clone());
        }
    }
    Ok(gap)
}

/// Content hash of everything the reference value depends on.
pub fn reference_key(problem: &FiniteSumProblem, region: &FeasibleRegion, opts: &ReferenceOptions) -> String {
    let mut h = Sha256::new();
    let payload = serde_json::to_vec(&(
        problem.data(),
        problem.dim(),
        problem.smoothness().to_bits(),
        region,
        opts.gap_tol.to_bits(),
        opts.max_lo,
        opts.max_gradient_steps,
    ))
    .expect("problem data serializes");
    h.update(&payload);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    value: f64,
    gap: f64,
    converged: bool,
    gradient_steps: u64,
    lo_calls: u64,
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("reference-{}.json", &key[..16]))
}

/// Cached reference value, computed and stored on a miss. The point is not
/// cached, so a hit returns an empty `point`.
pub fn cached_reference(
    dir: &Path,
    problem: &FiniteSumProblem,
    region: &FeasibleRegion,
    opts: &ReferenceOptions,
) -> Result<ReferenceOutcome, HarnessError> {
    let key = reference_key(problem, region, opts);
    let path = cache_path(dir, &key);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(e) = serde_json::from_str::<CacheEntry>(&text) {
            if e.key == key {
                return Ok(ReferenceOutcome {
                    value: e.value,
                    point: Vec::new(),
                    gap: e.gap,
                    converged: e.converged,
                    gradient_steps: e.gradient_steps,
                    lo_calls: e.lo_calls,
                });
            }
        }
    }
    let out = compute_reference_optimum(problem, region, opts)?;
    let entry = CacheEntry {
        key,
        value: out.value,
        gap: out.gap,
        converged: out.converged,
        gradient_steps: out.gradient_steps,
        lo_calls: out.lo_calls,
    };
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    let json = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
    tmp.write_all(json.as_bytes()).map_err(|e| HarnessError::io(&path, e))?;
    tmp.persist(&path).map_err(|e| HarnessError::io(&path, e.error))?;
    Ok(out)
}
