//! Per-epoch parameters of the accelerated variance-reduced method.
//!
//! `s₀ = ⌊log₂ n⌋ + 1`. Epochs `s ≤ s₀` double the inner length `T_s = 2^{s−1}`;
//! later epochs keep `T_{s₀}`. Convex and strongly convex problems differ in
//! the momentum `α_s`, the inexactness `η_{s,t}` and the averaging weights
//! `θ_t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("invalid schedule input: {0}")]
    Input(String),
    #[error("schedule for epoch {s} violates {what}")]
    Structure { s: usize, what: String },
    #[error("epoch {s}: parameter hypotheses fail ({0})", .violations.join("; "))]
    Hypotheses { s: usize, violations: Vec<String> },
}

/// Step size used by zeroth-order strongly convex schedules.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ZoGammaRule {
    /// `γ_s = 1/(5Lα_s)`.
    #[default]
    Standard,
    /// `γ_s = 1/(12 d L α_s)`.
    DimensionScaled { dim: usize },
}

/// Margins of the per-epoch parameter conditions
///
/// ```text
/// 1 + τγ − Lαγ > 0,   1 − α − p ≥ 0,   p − c·Lαγ / (1 + τγ − Lαγ) > 0
/// ```
///
/// with `c = 1` (first order) or `c = 4` (zeroth order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub curvature_margin: f64,
    pub momentum_margin: f64,
    pub variance_margin: f64,
}

/// Strict inequalities must clear this margin so that an analytic zero
/// computed in floating point does not count as positive.
pub const STRICT_MARGIN: f64 = 1e-12;

impl HypothesisCheck {
    pub fn evaluate(mode: Mode, l: f64, tau: f64, alpha: f64, p: f64, gamma: f64) -> Self {
        let c = match mode {
            Mode::FirstOrder => 1.0,
            Mode::ZerothOrder => 4.0,
        };
        let curvature_margin = 1.0 + tau * gamma - l * alpha * gamma;
        Self {
            curvature_margin,
            momentum_margin: 1.0 - alpha - p,
            variance_margin: p - c * l * alpha * gamma / curvature_margin,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.curvature_margin > STRICT_MARGIN) {
            v.push(format!("1 + τγ − Lαγ = {:e} is not positive", self.curvature_margin));
        }
        if !(self.momentum_margin >= -STRICT_MARGIN) {
            v.push(format!("1 − α − p = {:e} is negative", self.momentum_margin));
        }
        if !(self.variance_margin > STRICT_MARGIN) {
            v.push(format!("variance margin {:e} is not positive", self.variance_margin));
        }
        v
    }

    pub fn holds(&self) -> bool {
        self.violations().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub s: usize,
    pub s0: usize,
    pub t_len: usize,
    pub alpha: f64,
    pub p: f64,
    pub gamma: f64,
    /// Strong-convexity modulus the schedule was built for (0 if convex).
    pub tau: f64,
    /// `η_{s,t}` for `t = 1..=T_s`.
    pub eta: Vec<f64>,
    /// `θ_t` for `t = 1..=T_s`.
    pub theta: Vec<f64>,
    /// `Γ_t` for `t = 0..=T_s` (strongly convex only).
    pub big_gamma: Option<Vec<f64>>,
    pub hypotheses: HypothesisCheck,
}

impl EpochSchedule {
    /// Fails if the per-epoch parameter conditions above do not hold.
    pub fn check_hypotheses(&self) -> Result<(), ScheduleError> {
        let violations = self.hypotheses.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ScheduleError::Hypotheses { s: self.s, violations })
        }
    }

    fn validate(self) -> Result<Self, ScheduleError> {
        let fail = |what: &str| Err(ScheduleError::Structure { s: self.s, what: what.into() });
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.p) {
            return fail("alpha, p in [0, 1]");
        }
        if 1.0 - self.alpha - self.p < -1e-15 {
            return fail("1 - alpha - p >= 0");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return fail("gamma > 0");
        }
        if self.eta.len() != self.t_len || self.theta.len() != self.t_len {
            return fail("row lengths equal T_s");
        }
        if self.eta.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return fail("eta > 0");
        }
        if self.theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || self.theta.iter().sum::<f64>() <= 0.0 {
            return fail("theta >= 0 with positive sum");
        }
        Ok(self)
    }
}

/// `⌊log₂ n⌋ + 1`
pub fn s0_of(n: usize) -> usize {
    n.ilog2() as usize + 1
}

/// `2^{min(s, s₀) − 1}`
pub fn inner_len(n: usize, s: usize) -> usize {
    1usize << (s.min(s0_of(n)) - 1)
}

fn check_inputs(n: usize, l: f64, s: usize, d0: f64) -> Result<(), ScheduleError> {
    if n == 0 || s == 0 {
        return Err(ScheduleError::Input(format!("need n >= 1 and s >= 1, got n = {n}, s = {s}")));
    }
    if !(l > 0.0 && l.is_finite()) || !(d0 > 0.0 && d0.is_finite()) {
        return Err(ScheduleError::Input(format!("need L > 0 and D0 > 0, got L = {l}, D0 = {d0}")));
    }
    Ok(())
}

/// Constant from `γ_s = 1/(cLα_s)` in the convex case.
fn gamma_factor(mode: Mode) -> f64 {
    match mode {
        Mode::FirstOrder => 3.0,
        Mode::ZerothOrder => 5.0,
    }
}

pub fn schedule_convex(n: usize, l: f64, s: usize, d0: f64, mode: Mode) -> Result<EpochSchedule, ScheduleError> {
    check_inputs(n, l, s, d0)?;
    let s0 = s0_of(n);
    let t_len = inner_len(n, s);
    let alpha = if s <= s0 { 0.5 } else { 2.0 / (s - s0 + 4) as f64 };
    let p = 0.5;
    let gamma = 1.0 / (gamma_factor(mode) * l * alpha);
    let eta = vec![d0 / (s as f64 * t_len as f64 * l); t_len];
    let mut theta = vec![gamma / alpha * (alpha + p); t_len];
    theta[t_len - 1] = gamma / alpha;
    EpochSchedule {
        s,
        s0,
        t_len,
        alpha,
        p,
        gamma,
        tau: 0.0,
        eta,
        theta,
        big_gamma: None,
        hypotheses: HypothesisCheck::evaluate(mode, l, 0.0, alpha, p, gamma),
    }
    .validate()
}

/// The condition threshold `ς`: `3L/(4τ)` (first order) or `5L/(4τ)`.
pub fn varsigma(l: f64, tau: f64, mode: Mode) -> f64 {
    gamma_factor(mode) * l / (4.0 * tau)
}

pub fn schedule_strongly_convex(
    n: usize,
    l: f64,
    tau: f64,
    s: usize,
    d0: f64,
    mode: Mode,
    zo_gamma: ZoGammaRule,
) -> Result<EpochSchedule, ScheduleError> {
    check_inputs(n, l, s, d0)?;
    if !(tau > 0.0 && tau <= l) {
        return Err(ScheduleError::Input(format!("need 0 < tau <= L, got tau = {tau}")));
    }
    let s0 = s0_of(n);
    let t_len = inner_len(n, s);
    let sig = varsigma(l, tau, mode);
    let nf = n as f64;
    let alpha = if s <= s0 { 0.5 } else { (nf / (4.0 * sig)).sqrt().min(0.5) };
    let p = 0.5;
    let (gamma, ratio) = match mode {
        Mode::FirstOrder => {
            let g = 1.0 / (3.0 * l * alpha);
            (g, 1.0 + tau * g)
        }
        Mode::ZerothOrder => {
            let g = match zo_gamma {
                ZoGammaRule::Standard => 1.0 / (5.0 * l * alpha),
                ZoGammaRule::DimensionScaled { dim } => {
                    if dim == 0 {
                        return Err(ScheduleError::Input("dimension-scaled step needs dim >= 1".into()));
                    }
                    1.0 / (12.0 * dim as f64 * l * alpha)
                }
            };
            (g, 1.0 + tau * g / 2.0)
        }
    };
    let big_gamma: Vec<f64> = (0..=t_len).map(|t| ratio.powi(t as i32)).collect();
    let keep = 1.0 - alpha - p;
    let mut theta: Vec<f64> = (1..=t_len).map(|t| big_gamma[t - 1] - keep * big_gamma[t]).collect();
    theta[t_len - 1] = big_gamma[t_len - 1];

    let sf = s as f64;
    let eta_value = if s <= s0 {
        d0 / (sf * t_len as f64 * l)
    } else {
        let k = (s - s0 - 1) as i32;
        let decay = if nf >= sig { 0.8f64.powi(k) } else { ratio.powi(-(t_len as i32) * k) };
        decay * d0 / (sf * nf * l)
    };
    EpochSchedule {
        s,
        s0,
        t_len,
        alpha,
        p,
        gamma,
        tau,
        eta: vec![eta_value; t_len],
        theta,
        big_gamma: Some(big_gamma),
        hypotheses: HypothesisCheck::evaluate(mode, l, tau, alpha, p, gamma),
    }
    .validate()
}
