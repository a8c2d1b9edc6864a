//! Experiment configuration, read from TOML.
//!
//! ```toml
//! output_dir = "out/logistic"
//! seed = 0
//! seeds = 1
//! epochs = 40          # optional: epochs for arcs/storc, steps for cg/cgs/scgs
//!
//! [problem]
//! family = "logistic"  # logistic | quadratic | matrix_completion
//! n = 2000             # synthetic instance (omit when `path` is given)
//! d = 50
//! seed = 0
//!
//! [region]
//! kind = "l1_ball"     # l1_ball | box | nuclear_ball
//! radius = 10.0
//!
//! [reference]
//! policy = "compute"   # compute | fixed | none
//!
//! [[solvers]]
//! name = "arcs"
//! batch = 1
//!
//! [[solvers]]
//! name = "scgs"
//! label = "scgs-c1"
//! ```
//!
//! Relative dataset paths resolve against the directory of the config file.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use arcs::problems::ProblemKind;
use arcs::solvers::{ArcsOptions, CgOptions, CgsOptions, ScgsOptions, StorcOptions};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// First run seed; run `k` uses `seed + k`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub seeds: usize,
    /// Overrides every solver's epoch or step budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub timing: bool,
    pub problem: ProblemSpec,
    pub region: RegionSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub solvers: Vec<SolverEntry>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: ProblemKind,
    /// LIBSVM file (logistic), JSON component list (quadratic) or PGM/CSV
    /// grid (matrix completion).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Logistic only: pad the feature dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_seed: Option<u64>,
    /// Overrides the computed strong-convexity modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_convexity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    L1Ball,
    Box,
    NuclearBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub kind: RegionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Box bounds, applied to every coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePolicy {
    #[default]
    Compute,
    Fixed,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSpec {
    pub policy: ReferencePolicy,
    /// Used with `policy = "fixed"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub gap_tol: f64,
    pub max_lo: u64,
    pub max_gradient_steps: u64,
    pub cache: bool,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            policy: ReferencePolicy::Compute,
            value: None,
            gap_tol: 1e-10,
            max_lo: 1_000_000,
            max_gradient_steps: 200_000,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SolverSpec {
    Arcs(ArcsOptions),
    Cg(CgOptions),
    Cgs(CgsOptions),
    Scgs(ScgsOptions),
    Storc(StorcOptions),
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Arcs(_) => "arcs",
            SolverSpec::Cg(_) => "cg",
            SolverSpec::Cgs(_) => "cgs",
            SolverSpec::Scgs(_) => "scgs",
            SolverSpec::Storc(_) => "storc",
        }
    }

    /// Applies the experiment-wide budget, seed and timing switch.
    pub fn configured(&self, epochs: Option<usize>, seed: u64, timing: bool) -> SolverSpec {
        let mut s = self.clone();
        match &mut s {
            SolverSpec::Arcs(o) => {
                o.epochs = epochs.unwrap_or(o.epochs);
                o.seed = seed;
                o.timing = timing;
            }
            SolverSpec::Cg(o) => {
                o.steps = epochs.unwrap_or(o.steps);
                o.timing = timing;
            }
            SolverSpec::Cgs(o) => {
                o.steps = epochs.unwrap_or(o.steps);
                o.timing = timing;
            }
            SolverSpec::Scgs(o) => {
                o.steps = epochs.unwrap_or(o.steps);
                o.seed = seed;
                o.timing = timing;
            }
            SolverSpec::Storc(o) => {
                o.epochs = epochs.unwrap_or(o.epochs);
                o.seed = seed;
                o.timing = timing;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    /// Column value in the CSV; defaults to the solver name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: SolverSpec,
}

impl SolverEntry {
    pub fn id(&self) -> &str {
        self.label.as_deref().unwrap_or(self.spec.name())
    }
}

fn field(path: impl Into<String>, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config { path: path.into(), msg: msg.into() }
}

fn positive(path: &str, v: Option<f64>) -> Result<(), HarnessError> {
    match v {
        Some(r) if !(r > 0.0 && r.is_finite()) => Err(field(path, format!("must be positive, got {r}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
            field(line.map_or("<config>".to_string(), |l| format!("line {l}")), msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| field(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config { path: p, msg } => field(format!("{}: {p}", path.display()), msg),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks structural constraints and that referenced files exist.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.solvers.is_empty() {
            return Err(field("solvers", "at least one solver is required"));
        }
        if self.seeds == 0 {
            return Err(field("seeds", "must be at least 1"));
        }
        if self.epochs == Some(0) {
            return Err(field("epochs", "must be at least 1"));
        }
        let mut ids = HashSet::new();
        for (k, s) in self.solvers.iter().enumerate() {
            if !ids.insert(s.id().to_string()) {
                return Err(field(format!("solvers[{k}].label"), format!("duplicate solver id `{}`", s.id())));
            }
            if s.id().is_empty() {
                return Err(field(format!("solvers[{k}].label"), "must not be empty"));
            }
        }
        self.validate_problem()?;
        self.validate_region()?;
        let r = &self.reference;
        if r.policy == ReferencePolicy::Fixed && r.value.is_none_or(|v| !v.is_finite()) {
            return Err(field("reference.value", "a finite value is required with policy `fixed`"));
        }
        positive("reference.gap_tol", Some(r.gap_tol))?;
        Ok(())
    }

    fn validate_problem(&self) -> Result<(), HarnessError> {
        let p = &self.problem;
        if let Some(path) = &p.path {
            let full = self.resolve(path);
            if !full.is_file() {
                return Err(field("problem.path", format!("file not found: {}", full.display())));
            }
        } else {
            let need: &[(&str, Option<usize>)] = match p.family {
                ProblemKind::Logistic | ProblemKind::Quadratic => &[("n", p.n), ("d", p.d)],
                ProblemKind::MatrixCompletion => &[("rows", p.rows), ("cols", p.cols)],
            };
            for (name, v) in need {
                match v {
                    None => return Err(field(format!("problem.{name}"), "required for a synthetic instance")),
                    Some(0) => return Err(field(format!("problem.{name}"), "must be positive")),
                    _ => {}
                }
            }
        }
        if let Some(f) = p.observed_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(field("problem.observed_fraction", format!("must lie in (0, 1], got {f}")));
            }
        }
        if let Some(t) = p.strong_convexity {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(field("problem.strong_convexity", format!("must be non-negative, got {t}")));
            }
        }
        Ok(())
    }

    fn validate_region(&self) -> Result<(), HarnessError> {
        let r = &self.region;
        match r.kind {
            RegionKind::L1Ball | RegionKind::NuclearBall => {
                if r.radius.is_none() {
                    return Err(field("region.radius", "required"));
                }
                positive("region.radius", r.radius)?;
            }
            RegionKind::Box => {
                let (Some(lo), Some(hi)) = (r.lo, r.hi) else {
                    return Err(field("region.lo", "box regions need both `lo` and `hi`"));
                };
                if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                    return Err(field("region.hi", format!("need finite lo <= hi, got [{lo}, {hi}]")));
                }
            }
        }
        if r.kind == RegionKind::NuclearBall && self.problem.family != ProblemKind::MatrixCompletion {
            return Err(field("region.kind", "nuclear_ball needs a matrix_completion problem"));
        }
        positive("region.power_tol", r.power_tol)?;
        if r.power_max_iters == Some(0) {
            return Err(field("region.power_max_iters", "must be positive"));
        }
        Ok(())
    }
}
