//! Feasible regions and their linear minimization oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm};
use crate::oracles::OracleCounters;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmoError {
    #[error("dimension mismatch: region has dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("top singular pair did not converge in {iters} iterations (relative residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("invalid region: {0}")]
    Invalid(String),
}

/// Settings of the top-singular-pair solver behind the nuclear-ball oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerIterConfig {
    pub max_iters: usize,
    /// Stop once `‖Gᵀ G v − λ v‖ ≤ tol · λ`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerIterConfig {
    fn default() -> Self {
        Self { max_iters: 200, tol: 1e-10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleRegion {
    L1Ball { dim: usize, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Row-major `rows × cols` matrices with nuclear norm at most `radius`.
    NuclearBall { rows: usize, cols: usize, radius: f64, power: PowerIterConfig },
}

/// Oracle output plus the achieved relative residual of the singular-pair
/// solve (nuclear ball only).
#[derive(Debug, Clone, PartialEq)]
pub struct LmoOutput {
    pub vertex: Vec<f64>,
    pub residual: Option<f64>,
}

impl FeasibleRegion {
    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self, LmoError> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(LmoError::Invalid(format!("l1 ball needs dim > 0 and radius > 0, got {dim}, {radius}")));
        }
        Ok(Self::L1Ball { dim, radius })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, LmoError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(LmoError::Invalid("box bounds must be nonempty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
            return Err(LmoError::Invalid("box bounds must be finite with lo <= hi".into()));
        }
        Ok(Self::Box { lo, hi })
    }

    pub fn nuclear_ball(rows: usize, cols: usize, radius: f64, power: PowerIterConfig) -> Result<Self, LmoError> {
        if rows == 0 || cols == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(LmoError::Invalid("nuclear ball needs positive shape and radius".into()));
        }
        if power.max_iters == 0 || !(power.tol > 0.0) {
            return Err(LmoError::Invalid("power iteration needs max_iters >= 1 and tol > 0".into()));
        }
        Ok(Self::NuclearBall { rows, cols, radius, power })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::L1Ball { dim, .. } => *dim,
            Self::Box { lo, .. } => lo.len(),
            Self::NuclearBall { rows, cols, .. } => rows * cols,
        }
    }

    /// Euclidean (Frobenius) diameter.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::L1Ball { radius, .. } => 2.0 * radius,
            Self::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt(),
            Self::NuclearBall { radius, .. } => 2.0 * radius,
        }
    }

    /// A canonical feasible point: the origin, or its clamp into a box.
    pub fn start_point(&self) -> Vec<f64> {
        match self {
            Self::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.0f64.clamp(*l, *h)).collect(),
            _ => vec![0.0; self.dim()],
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Self::L1Ball { radius, .. } => x.iter().map(|v| v.abs()).sum::<f64>() <= radius + tol,
            Self::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            Self::NuclearBall { rows, cols, radius, .. } => {
                let m = DMatrix::from_row_slice(*rows, *cols, x);
                m.singular_values().sum() <= radius + tol
            }
        }
    }

    /// `argmin_{v ∈ C} ⟨g, v⟩`; one LO call.
    pub fn lmo(&self, g: &[f64], counters: &mut OracleCounters) -> Result<Vec<f64>, LmoError> {
        self.lmo_detailed(g, counters).map(|o| o.vertex)
    }

    pub fn lmo_detailed(&self, g: &[f64], counters: &mut OracleCounters) -> Result<LmoOutput, LmoError> {
        let d = self.dim();
        if g.len() != d {
            return Err(LmoError::DimensionMismatch { expected: d, got: g.len() });
        }
        counters.lo += 1;
        match self {
            Self::L1Ball { radius, .. } => {
                // first maximal index wins ties
                let mut k = 0;
                for (j, v) in g.iter().enumerate() {
                    if v.abs() > g[k].abs() {
                        k = j;
                    }
                }
                let mut v = vec![0.0; d];
                v[k] = if g[k] >= 0.0 { -radius } else { *radius };
                Ok(LmoOutput { vertex: v, residual: None })
            }
            Self::Box { lo, hi } => {
                let v = g.iter().zip(lo.iter().zip(hi)).map(|(gj, (l, h))| if *gj >= 0.0 { *l } else { *h }).collect();
                Ok(LmoOutput { vertex: v, residual: None })
            }
            Self::NuclearBall { rows, cols, radius, power } => {
                let (u, v, residual) = top_singular_pair(g, *rows, *cols, power)?;
                let mut out = vec![0.0; d];
                for r in 0..*rows {
                    for c in 0..*cols {
                        out[r * cols + c] = -radius * u[r] * v[c];
                    }
                }
                Ok(LmoOutput { vertex: out, residual: Some(residual) })
            }
        }
    }
}

fn unit_gaussian(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn mat_vec(g: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    (0..rows).map(|r| dot(&g[r * cols..(r + 1) * cols], v)).collect()
}

fn mat_t_vec(g: &[f64], rows: usize, cols: usize, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        let ur = u[r];
        for (o, gv) in out.iter_mut().zip(&g[r * cols..(r + 1) * cols]) {
            *o += ur * gv;
        }
    }
    out
}

/// Top singular pair `(u, v)` of the row-major matrix `g`, via Krylov-
/// accelerated power iteration on `gᵀg` (Lanczos with full
/// reorthogonalization, seeded start). Returns the relative eigen-residual
/// achieved. A zero `g` yields a seeded rank-one direction.
pub fn top_singular_pair(
    g: &[f64],
    rows: usize,
    cols: usize,
    cfg: &PowerIterConfig,
) -> Result<(Vec<f64>, Vec<f64>, f64), LmoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = unit_gaussian(cols, &mut rng);
    if g.iter().all(|v| *v == 0.0) {
        let u = unit_gaussian(rows, &mut rng);
        return Ok((u, start, 0.0));
    }
    let apply = |x: &[f64]| mat_t_vec(g, rows, cols, &mat_vec(g, rows, cols, x));

    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;
    let max_k = cfg.max_iters.min(cols).max(1);
    for k in 0..max_k {
        let mut w = apply(&basis[k]);
        let a = dot(&w, &basis[k]);
        alphas.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let b = norm(&w);

        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let top = eig.eigenvalues.imax();
        let theta = eig.eigenvalues[top];
        let s = eig.eigenvectors.column(top);
        residual = if theta > 0.0 { (b * s[m - 1]).abs() / theta } else { f64::INFINITY };

        let exhausted = b <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE) || m == cols;
        if residual <= cfg.tol || exhausted {
            let mut v = vec![0.0; cols];
            for (j, q) in basis.iter().enumerate() {
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi += s[j] * qi);
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let mut u = mat_vec(g, rows, cols, &v);
            let nu = norm(&u);
            if nu == 0.0 {
                return Err(LmoError::NoConvergence { iters: k + 1, residual });
            }
            u.iter_mut().for_each(|x| *x /= nu);
            return Ok((u, v, residual));
        }
        betas.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    Err(LmoError::NoConvergence { iters: max_k, residual })
}
