//! Projection-free optimization of finite sums `f(x) = (1/n) Σ f_i(x)` over
//! convex sets that admit a cheap linear minimization oracle.
//!
//! The crate provides
//!
//! * [`problems`]: finite-sum objectives (logistic regression, matrix
//!   completion, synthetic quadratics) and dataset ingestion,
//! * [`oracles`]: counted gradient / function queries and the coordinate-wise
//!   zeroth-order gradient estimator,
//! * [`lmo`]: feasible regions (ℓ1 ball, box, nuclear-norm ball) with their
//!   linear minimization oracles,
//! * [`condg`]: the Frank-Wolfe inner solver for the proximal quadratic
//!   subproblem used by all sliding methods,
//! * [`solvers`]: ARCS (accelerated variance-reduced conditional gradient
//!   sliding) in first- and zeroth-order modes, plus the CG, CGS, SCGS and
//!   STORC baselines.
//!
//! Every solver charges its oracle calls to an [`OracleCounters`] value so
//! that runs can be compared on gradient-query, function-query and
//! linear-oracle complexity.

pub mod condg;
pub mod linalg;
pub mod lmo;
pub mod oracles;
pub mod problems;
pub mod record;
pub mod solvers;

pub use condg::{condg_solve, CondGError, CondGResult, QuadSubproblem};
pub use lmo::{FeasibleRegion, LmoError, PowerIterConfig};
pub use oracles::{OracleCounters, SmoothingConfig};
pub use problems::{FiniteSum, FiniteSumProblem, ProblemError};
pub use record::{RecordRow, RunRecord};
