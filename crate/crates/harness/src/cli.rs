//! `arcs-bench` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use arcs::problems::ProblemKind;
use arcs::solvers::SOLVER_NAMES;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::experiment::{build_problem, build_region, generate_synthetic, run_experiment};
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "arcs-bench", about = "Run projection-free solver benchmarks", version)]
struct Args {
    /// Override the config's first seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override every solver's epoch or step budget.
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Number of consecutive seeds to run.
    #[arg(long, global = true)]
    seeds: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write metrics under the output directory.
    Run { config: PathBuf },
    /// Print the available solver names.
    ListSolvers,
    /// Write a synthetic dataset (logistic, quadratic or matrix_completion).
    GenSynthetic { family: String, n: usize, d: usize, seed: u64, out: PathBuf },
    /// Check a config and its datasets without running solvers.
    Validate { config: PathBuf },
}

fn load(path: &Path, args: &Args) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = &args.out_dir {
        // relative to the working directory, not the config file
        cfg.output_dir = std::env::current_dir().map(|c| c.join(d)).unwrap_or_else(|_| d.clone());
    }
    if args.epochs.is_some() {
        cfg.epochs = args.epochs;
    }
    if let Some(k) = args.seeds {
        cfg.seeds = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_family(s: &str) -> Result<ProblemKind, HarnessError> {
    match s {
        "logistic" => Ok(ProblemKind::Logistic),
        "quadratic" => Ok(ProblemKind::Quadratic),
        "matrix_completion" | "matrix" => Ok(ProblemKind::MatrixCompletion),
        other => Err(HarnessError::Config {
            path: "family".into(),
            msg: format!("unknown family `{other}` (expected logistic, quadratic or matrix_completion)"),
        }),
    }
}

fn execute(args: &Args, out: &mut dyn Write) -> Result<(), HarnessError> {
    let w = |out: &mut dyn Write, s: String| {
        out.write_all(s.as_bytes()).map_err(|e| HarnessError::io(Path::new("<stdout>"), e))
    };
    match &args.command {
        Command::ListSolvers => {
            for name in SOLVER_NAMES {
                w(out, format!("{name}\n"))?;
            }
        }
        Command::Validate { config } => {
            let cfg = load(config, args)?;
            let problem = build_problem(&cfg)?;
            build_region(&cfg, &problem)?;
            w(out, format!("{}: ok ({} solvers)\n", config.display(), cfg.solvers.len()))?;
        }
        Command::Run { config } => {
            let cfg = load(config, args)?;
            let result = run_experiment(&cfg)?;
            for s in &result.runs {
                w(out, format!("{}\n", s.dir.join("metrics.csv").display()))?;
            }
        }
        Command::GenSynthetic { family, n, d, seed, out: path } => {
            generate_synthetic(parse_family(family)?, *n, *d, *seed, path)?;
            w(out, format!("{}\n", path.display()))?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code: 0 on success, 1 on config errors, 2 on runtime failures.
pub fn cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let target: &mut dyn Write = if help { out } else { err };
            let _ = write!(target, "{}", e.render());
            return if help { 0 } else { 1 };
        }
    };
    match execute(&args, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
