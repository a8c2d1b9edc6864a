//! Building problems from configs and running solver sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use arcs::problems::image::{read_csv_grid, read_pgm, Grid};
use arcs::problems::libsvm::parse_libsvm;
use arcs::problems::synthetic::{low_rank_grid, LogisticSpec, QuadraticSpec};
use arcs::problems::{ProblemKind, QuadraticComponent};
use arcs::solvers::{arcs_run, cg_run, cgs_run, scgs_run, storc_run};
use arcs::{FeasibleRegion, FiniteSum, FiniteSumProblem, PowerIterConfig, RunRecord};
use serde::Serialize;

use crate::config::{ExperimentConfig, ReferencePolicy, RegionKind, SolverSpec};
use crate::output::{emit_csv, emit_plot_script};
use crate::reference::{cached_reference, compute_reference_optimum, ReferenceOptions, ReferenceOutcome};
use crate::HarnessError;

const DEFAULT_OBSERVED: f64 = 0.7;
const DEFAULT_RANK: usize = 3;

fn data_err(file: &Path, msg: impl ToString) -> HarnessError {
    HarnessError::Data { file: file.to_path_buf(), msg: msg.to_string() }
}

fn load_grid(path: &Path) -> Result<Grid, HarnessError> {
    let bytes = fs::read(path).map_err(|e| data_err(path, e))?;
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) || bytes.starts_with(b"P2")
        || bytes.starts_with(b"P5");
    if is_pgm {
        read_pgm(&bytes).map_err(|e| data_err(path, e))
    } else {
        let text = String::from_utf8(bytes).map_err(|e| data_err(path, e))?;
        read_csv_grid(&text).map_err(|e| data_err(path, e))
    }
}

/// Builds the objective described by `config.problem`.
pub fn build_problem(config: &ExperimentConfig) -> Result<FiniteSumProblem, HarnessError> {
    let p = &config.problem;
    let path = p.path.as_ref().map(|q| config.resolve(q));
    let problem = match p.family {
        ProblemKind::Logistic => match &path {
            Some(path) => {
                let file = fs::File::open(path).map_err(|e| data_err(path, e))?;
                let (examples, d) = parse_libsvm(std::io::BufReader::new(file)).map_err(|e| data_err(path, e))?;
                let dim = p.dim.unwrap_or(d).max(d);
                FiniteSumProblem::logistic(examples, dim).map_err(|e| data_err(path, e))?
            }
            None => LogisticSpec::new(p.n.unwrap_or(0), p.d.unwrap_or(0), p.seed).build()?,
        },
        ProblemKind::Quadratic => match &path {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
                let comps: Vec<QuadraticComponent> = serde_json::from_str(&text).map_err(|e| data_err(path, e))?;
                FiniteSumProblem::quadratic(comps).map_err(|e| data_err(path, e))?
            }
            None => QuadraticSpec::new(p.n.unwrap_or(0), p.d.unwrap_or(0), p.seed).build()?,
        },
        ProblemKind::MatrixCompletion => {
            let grid = match &path {
                Some(path) => load_grid(path)?,
                None => low_rank_grid(
                    p.rows.unwrap_or(0),
                    p.cols.unwrap_or(0),
                    p.rank.unwrap_or(DEFAULT_RANK),
                    p.seed,
                ),
            };
            let radius = config.region.radius.unwrap_or(1.0);
            let data = grid.completion_data(
                p.observed_fraction.unwrap_or(DEFAULT_OBSERVED),
                p.mask_seed.unwrap_or(p.seed),
                radius,
            )?;
            FiniteSumProblem::matrix_completion(data)?
        }
    };
    Ok(match p.strong_convexity {
        Some(tau) => problem.with_strong_convexity(tau)?,
        None => problem,
    })
}

pub fn build_region(config: &ExperimentConfig, problem: &FiniteSumProblem) -> Result<FeasibleRegion, HarnessError> {
    let r = &config.region;
    let d = problem.dim();
    let region = match r.kind {
        RegionKind::L1Ball => FeasibleRegion::l1_ball(d, r.radius.unwrap_or(1.0))?,
        RegionKind::Box => FeasibleRegion::boxed(vec![r.lo.unwrap_or(0.0); d], vec![r.hi.unwrap_or(0.0); d])?,
        RegionKind::NuclearBall => {
            let arcs::problems::ProblemData::MatrixCompletion(m) = problem.data() else {
                return Err(HarnessError::Config {
                    path: "region.kind".into(),
                    msg: "nuclear_ball needs a matrix_completion problem".into(),
                });
            };
            let defaults = PowerIterConfig::default();
            let power = PowerIterConfig {
                max_iters: r.power_max_iters.unwrap_or(defaults.max_iters),
                tol: r.power_tol.unwrap_or(defaults.tol),
                seed: defaults.seed,
            };
            FeasibleRegion::nuclear_ball(m.rows(), m.cols(), r.radius.unwrap_or(1.0), power)?
        }
    };
    Ok(region)
}

/// Runs one configured solver and returns its record under `id`.
pub fn run_solver(
    spec: &SolverSpec,
    id: &str,
    problem: &FiniteSumProblem,
    region: &FeasibleRegion,
) -> Result<RunRecord, HarnessError> {
    let mut record = match spec {
        SolverSpec::Arcs(o) => arcs_run(problem, region, o)?.1.record,
        SolverSpec::Cg(o) => cg_run(problem, region, o)?.output.record,
        SolverSpec::Cgs(o) => cgs_run(problem, region, o)?.record,
        SolverSpec::Scgs(o) => scgs_run(problem, region, o)?.record,
        SolverSpec::Storc(o) => storc_run(problem, region, o)?.record,
    };
    record.solver = id.to_string();
    for row in &mut record.rows {
        row.solver = id.to_string();
    }
    Ok(record)
}

/// Runs of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRuns {
    pub seed: u64,
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Shared reference value; `None` with policy `none`.
    pub reference: Option<f64>,
    pub reference_outcome: Option<ReferenceOutcome>,
    pub runs: Vec<SeedRuns>,
}

impl ExperimentOutput {
    /// One record per (solver, seed), seed-major.
    pub fn records(&self) -> Vec<&RunRecord> {
        self.runs.iter().flat_map(|s| &s.records).collect()
    }
}

#[derive(Serialize)]
struct SolverSummary<'a> {
    solver: &'a str,
    rows: usize,
    final_objective: Option<f64>,
    gqo: u64,
    fqo: u64,
    lo: u64,
    soft_failures: u64,
    max_lo_residual: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    reference: Option<f64>,
    reference_gap: Option<f64>,
    reference_converged: Option<bool>,
    solvers: Vec<SolverSummary<'a>>,
}

fn write_summary(path: &Path, seed: u64, out_ref: Option<f64>, outcome: Option<&ReferenceOutcome>, records: &[RunRecord]) -> Result<(), HarnessError> {
    let solvers = records
        .iter()
        .map(|r| {
            let last = r.rows.last();
            SolverSummary {
                solver: &r.solver,
                rows: r.rows.len(),
                final_objective: r.final_objective(),
                gqo: last.map_or(0, |x| x.gqo),
                fqo: last.map_or(0, |x| x.fqo),
                lo: last.map_or(0, |x| x.lo),
                soft_failures: r.soft_failures,
                max_lo_residual: r.max_lo_residual,
            }
        })
        .collect();
    let summary = Summary {
        seed,
        reference: out_ref,
        reference_gap: outcome.map(|o| o.gap),
        reference_converged: outcome.map(|o| o.converged),
        solvers,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    fs::write(path, json).map_err(|e| HarnessError::io(path, e))
}

/// Validates the config, runs every (solver, seed) pair and writes
/// `seed-<k>/metrics.csv`, `plot.gp` and `summary.json` under the output
/// directory. Suboptimality uses one reference shared by all runs: the
/// computed optimum, lowered to the smallest recorded objective if a solver
/// went below it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let problem = build_problem(config)?;
    let region = build_region(config, &problem)?;
    let out_dir = config.resolve(&config.output_dir);
    fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;

    let ref_opts = ReferenceOptions {
        gap_tol: config.reference.gap_tol,
        max_lo: config.reference.max_lo,
        max_gradient_steps: config.reference.max_gradient_steps,
    };
    let outcome = match config.reference.policy {
        ReferencePolicy::Compute if config.reference.cache => Some(cached_reference(&out_dir, &problem, &region, &ref_opts)?),
        ReferencePolicy::Compute => Some(compute_reference_optimum(&problem, &region, &ref_opts)?),
        _ => None,
    };
    if let Some(o) = outcome.as_ref().filter(|o| !o.converged) {
        eprintln!("warning: reference optimum not certified (gap {:e})", o.gap);
    }

    let mut runs = Vec::with_capacity(config.seeds);
    for k in 0..config.seeds {
        let seed = config.seed + k as u64;
        let mut records = Vec::with_capacity(config.solvers.len());
        for entry in &config.solvers {
            let spec = entry.spec.configured(config.epochs, seed, config.timing);
            records.push(run_solver(&spec, entry.id(), &problem, &region)?);
        }
        runs.push(SeedRuns { seed, dir: out_dir.join(format!("seed-{seed}")), records });
    }

    let reference = match config.reference.policy {
        ReferencePolicy::None => None,
        ReferencePolicy::Fixed => config.reference.value,
        ReferencePolicy::Compute => {
            let lowest = runs
                .iter()
                .flat_map(|s| &s.records)
                .flat_map(|r| &r.rows)
                .map(|r| r.objective)
                .fold(f64::INFINITY, f64::min);
            outcome.as_ref().map(|o| o.value.min(lowest))
        }
    };
    for s in &mut runs {
        if let Some(v) = reference {
            for r in &mut s.records {
                r.fill_subopt(v);
            }
        }
        fs::create_dir_all(&s.dir).map_err(|e| HarnessError::io(&s.dir, e))?;
        emit_csv(&s.records, &s.dir.join("metrics.csv"))?;
        emit_plot_script(&s.records, &s.dir.join("plot.gp"))?;
        write_summary(&s.dir.join("summary.json"), s.seed, reference, outcome.as_ref(), &s.records)?;
    }
    Ok(ExperimentOutput { reference, reference_outcome: outcome, runs })
}

/// Writes a synthetic instance: LIBSVM for logistic, a JSON component list
/// for quadratics, a CSV grid (`n × d`) for matrix completion.
pub fn generate_synthetic(family: ProblemKind, n: usize, d: usize, seed: u64, out: &Path) -> Result<(), HarnessError> {
    if n == 0 || d == 0 {
        return Err(HarnessError::Config { path: "n, d".into(), msg: "must be positive".into() });
    }
    let bytes = match family {
        ProblemKind::Logistic => {
            let mut buf = Vec::new();
            arcs::problems::libsvm::write_libsvm(&LogisticSpec::new(n, d, seed).examples(), &mut buf)
                .map_err(|e| HarnessError::io(out, e))?;
            buf
        }
        ProblemKind::Quadratic => {
            let p = QuadraticSpec::new(n, d, seed).build()?;
            let arcs::problems::ProblemData::Quadratic(cs) = p.data() else { unreachable!() };
            serde_json::to_vec(cs).expect("components serialize")
        }
        ProblemKind::MatrixCompletion => low_rank_grid(n, d, DEFAULT_RANK.min(n.min(d)), seed).to_csv().into_bytes(),
    };
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(out, bytes).map_err(|e| HarnessError::io(out, e))?;
    Ok(())
}
