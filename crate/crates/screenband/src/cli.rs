//! Subcommands of the `screenband` binary.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use screening_core::oracle::{oracle_solve, verify_structure, OracleInstance};
use screening_core::sim::ExperimentConfig;
use screening_core::solver::{fixed_point_solve, solve, FixedPointTrace};
use screening_core::value::value_curve;
use screening_core::{Budgets, Error as CoreError, SolverKind, SolverOptions};

use crate::error::{CliError, Result};
use crate::evaluate::{evaluate_external, Evaluation};
use crate::io::{
    read_scores, render_aggregates, render_curve, render_policy, render_rows, render_table, render_trace, write_file,
    Provenance,
};
use crate::parallel::{run_experiment, with_threads};
use crate::spec::{policy_kinds, AlphaGrid, DistSpec};
use crate::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "screenband", version, about = "Optimal screening bands for budgeted allocation")]
pub struct Cli {
    /// Maximum number of worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal policy for one pair of budgets, written as JSON.
    Solve(SolveArgs),
    /// Value of screening along a grid of screening budgets.
    Curve(CurveArgs),
    /// Replicated simulations of optimal screening and baselines.
    Simulate(SimulateArgs),
    /// Optimal screening on a score file, measured against held-out labels.
    Evaluate(EvaluateArgs),
    /// Exhaustive search over screening sets of a small instance.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    FixedPoint,
    RootFind,
    /// Uniform risk only.
    ClosedForm,
}

impl SolverChoice {
    fn kind(self) -> SolverKind {
        match self {
            SolverChoice::FixedPoint => SolverKind::FixedPoint,
            SolverChoice::RootFind => SolverKind::RootFind,
            SolverChoice::ClosedForm => SolverKind::ClosedFormUniform,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SolverChoice::FixedPoint => "fixed-point",
            SolverChoice::RootFind => "root-find",
            SolverChoice::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Convergence tolerance on successive iterates (bracket width for root-find).
    #[arg(long, default_value = "1e-10")]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

impl SolverFlags {
    fn options(&self) -> Result<SolverOptions> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::invalid(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(CliError::invalid("--max-iter must be at least 1"));
        }
        Ok(SolverOptions { tol: self.tol, max_iter: self.max_iter })
    }

    fn flags(&self) -> String {
        format!("--tol {:e} --max-iter {}", self.tol, self.max_iter)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `uniform`, `beta:t=<t>`, `pointmass:c=<c>` or `scores:<path>`.
    #[arg(long)]
    pub dist: DistSpec,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = SolverChoice::FixedPoint)]
    pub solver: SolverChoice,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fixed-point iterates here as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Risk distribution, as for `solve`.
    #[arg(long)]
    pub dist: DistSpec,
    #[arg(long)]
    pub beta: f64,
    /// `start:stop:steps` or a comma-separated list.
    #[arg(long)]
    pub alpha_grid: AlphaGrid,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("population").required(true).args(["dist", "t_grid"])))]
pub struct SimulateArgs {
    /// Risk distribution, as for `solve`.
    #[arg(long)]
    pub dist: Option<DistSpec>,
    /// Symmetric Beta shapes, one simulation each. Outputs get a `_t<t>` suffix.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub alpha_grid: AlphaGrid,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Policies to compare with optimal screening.
    #[arg(long, value_delimiter = ',', default_value = "none,random,heuristic")]
    pub baselines: Vec<String>,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    /// Per-replication table.
    #[arg(long)]
    pub out: PathBuf,
    /// Mean and standard deviation table (default: `<out stem>.aggregate.csv`).
    #[arg(long)]
    pub aggregate_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// `id,score` file.
    #[arg(long)]
    pub scores: PathBuf,
    /// `id,label` file with labels 0 or 1.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub alpha_grid: AlphaGrid,
    /// Seed of the random screening baseline.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// `id,score` file with at most 20 units.
    #[arg(long)]
    pub scores: PathBuf,
    /// Number of units to screen.
    #[arg(long)]
    pub k: usize,
    /// Allocation budget in units; may be fractional.
    #[arg(long)]
    pub budget: f64,
    /// Also check the interval structure of the optimum.
    #[arg(long)]
    pub verify: bool,
}

/// Runs a parsed command line and writes its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let report = with_threads(cli.threads, || execute(&cli.command))??;
    out.write_all(report.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Solve(a) => run_solve(a),
        Command::Curve(a) => run_curve(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Oracle(a) => run_oracle(a),
    }
}

fn run_solve(a: &SolveArgs) -> Result<String> {
    let budgets = Budgets::new(a.alpha, a.beta)?;
    let opts = a.solver_flags.options()?;
    if a.trace.is_some() && a.solver != SolverChoice::FixedPoint {
        return Err(CliError::invalid("--trace needs --solver fixed-point"));
    }
    let d = a.dist.load()?;
    let prov = Provenance {
        command: "solve",
        flags: format!(
            "--dist {} --alpha {} --beta {} --solver {} {}",
            a.dist,
            a.alpha,
            a.beta,
            a.solver.name(),
            a.solver_flags.flags()
        ),
        seed: None,
    };
    let write_trace = |trace: &FixedPointTrace| match &a.trace {
        Some(path) => write_file(path, &render_trace(&prov, trace)),
        None => Ok(()),
    };

    let policy = if a.solver == SolverChoice::FixedPoint && budgets.alpha() > 0.0 {
        match fixed_point_solve(&d, budgets, &opts) {
            Ok((policy, trace)) => {
                write_trace(&trace)?;
                policy
            }
            Err(CoreError::NotConverged(trace)) => {
                write_trace(&trace)?;
                return Err(CoreError::NotConverged(trace).into());
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        let policy = solve(&d, budgets, a.solver.kind(), &opts)?;
        // no screening budget, nothing to iterate
        write_trace(&FixedPointTrace {
            rho_sequence: Vec::new(),
            contraction: 0.0,
            tolerance: opts.tol,
            max_iterations: opts.max_iter,
        })?;
        policy
    };
    write_file(&a.out, &render_policy(&prov, &policy)?)?;
    Ok(format!(
        "q_alpha={} q_beta={} rho_star={} iterations={} in_guaranteed_regime={}\n",
        policy.q_alpha, policy.q_beta, policy.rho_star, policy.iterations, policy.in_guaranteed_regime
    ))
}

fn run_curve(a: &CurveArgs) -> Result<String> {
    Budgets::new(0.0, a.beta)?;
    a.alpha_grid.check(a.beta)?;
    let opts = a.solver_flags.options()?;
    let d = a.dist.load()?;
    let curve = value_curve(&d, a.beta, a.alpha_grid.values(), &opts)?;
    let prov = Provenance {
        command: "curve",
        flags: format!("--dist {} --beta {} --alpha-grid {} {}", a.dist, a.beta, a.alpha_grid, a.solver_flags.flags()),
        seed: None,
    };
    write_file(&a.out, &render_curve(&prov, &curve))?;
    if let Some(e) = curve.rows.iter().find_map(|r| r.failure.clone()) {
        return Err(e.into());
    }
    Ok(format!("{} rows written to {}\n", curve.rows.len(), a.out.display()))
}

/// `dir/name.csv` + `_t2` -> `dir/name_t2.csv`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn check_population_budgets(n: usize, beta: f64, grid: &AlphaGrid) -> Result<()> {
    for &alpha in grid.values() {
        let b = Budgets::new(alpha, beta)?;
        if b.budget_units(n) == 0 {
            return Err(CliError::invalid(format!("beta={beta} leaves no allocation budget with n={n}")));
        }
        if b.budget_units(n) + b.screen_units(n) > n {
            return Err(CliError::invalid(format!("alpha={alpha} and beta={beta} together exceed n={n} units")));
        }
    }
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Result<String> {
    Budgets::new(0.0, a.beta)?;
    a.alpha_grid.check(a.beta)?;
    if a.n == 0 || a.reps == 0 {
        return Err(CliError::invalid("--n and --reps must be at least 1"));
    }
    check_population_budgets(a.n, a.beta, &a.alpha_grid)?;
    let opts = a.solver_flags.options()?;
    let kinds = policy_kinds(&a.baselines)?;
    let baselines: Vec<&str> = kinds[1..].iter().map(|k| k.name()).collect();
    let aggregate_out = a.aggregate_out.clone().unwrap_or_else(|| with_suffix(&a.out, ".aggregate"));

    // (distribution, rows path, aggregate path)
    let runs: Vec<(DistSpec, PathBuf, PathBuf)> = match (&a.dist, &a.t_grid) {
        (Some(d), _) => vec![(d.clone(), a.out.clone(), aggregate_out)],
        (None, Some(ts)) => {
            let mut runs = Vec::new();
            for &t in ts {
                let d: DistSpec = format!("beta:t={t}").parse().map_err(CliError::Invalid)?;
                let suffix = format!("_t{t}");
                runs.push((d, with_suffix(&a.out, &suffix), with_suffix(&aggregate_out, &suffix)));
            }
            runs
        }
        (None, None) => unreachable!("clap requires --dist or --t-grid"),
    };

    let mut summary = String::new();
    let mut first_failure = None;
    for (spec, rows_path, aggregate_path) in runs {
        let config = ExperimentConfig {
            dist: spec.load()?,
            beta: a.beta,
            alpha_grid: a.alpha_grid.values().to_vec(),
            kinds: kinds.clone(),
            n: a.n,
            reps: a.reps,
            master_seed: a.seed,
            solver: opts,
        };
        let report = run_experiment(&config)?;
        let prov = Provenance {
            command: "simulate",
            flags: format!(
                "--dist {spec} --beta {} --alpha-grid {} --n {} --reps {} --seed {} --baselines {} {}",
                a.beta,
                a.alpha_grid,
                a.n,
                a.reps,
                a.seed,
                baselines.join(","),
                a.solver_flags.flags()
            ),
            seed: Some(a.seed),
        };
        write_file(&rows_path, &render_rows(&prov, &report))?;
        write_file(&aggregate_path, &render_aggregates(&prov, &report))?;
        for agg in report.aggregates.iter().filter(|g| g.alpha == config.alpha_grid[0] || g.alpha == a.beta) {
            let _ = writeln!(
                summary,
                "{spec} {} alpha={} precision {:.4} ± {:.4}",
                agg.kind.name(),
                agg.alpha,
                agg.mean,
                agg.std
            );
        }
        if first_failure.is_none() {
            first_failure = report.rows.iter().find_map(|r| r.outcome.clone().err());
        }
    }
    match first_failure {
        Some(e) => Err(e.into()),
        None => Ok(summary),
    }
}

pub const EVALUATION_HEADER: [&str; 7] =
    ["alpha", "q_alpha", "q_beta", "expected_precision", "optimal", "random", "none"];

/// One row per grid point: thresholds and expected precision of the optimal
/// policy, then realized precision of each evaluated policy.
pub fn render_evaluation(prov: &Provenance, eval: &Evaluation) -> String {
    let precision = |kind, alpha| eval.report.aggregate(kind, alpha).map_or(f64::NAN, |g| g.mean).to_string();
    let rows = eval.curve.rows.iter().map(|r| {
        let mut row: Vec<String> = [r.alpha, r.q_alpha, r.q_beta, r.precision].map(|x| x.to_string()).to_vec();
        row.extend(crate::evaluate::EVALUATED_KINDS.map(|k| precision(k, r.alpha)));
        row
    });
    render_table(prov, &EVALUATION_HEADER, rows)
}

fn run_evaluate(a: &EvaluateArgs) -> Result<String> {
    Budgets::new(0.0, a.beta)?;
    a.alpha_grid.check(a.beta)?;
    let opts = a.solver_flags.options()?;
    let eval = evaluate_external(&a.scores, &a.labels, a.beta, a.alpha_grid.values(), a.seed, &opts)?;
    let prov = Provenance {
        command: "evaluate",
        flags: format!(
            "--scores {} --labels {} --beta {} --alpha-grid {} --seed {} {}",
            a.scores.display(),
            a.labels.display(),
            a.beta,
            a.alpha_grid,
            a.seed,
            a.solver_flags.flags()
        ),
        seed: Some(a.seed),
    };
    write_file(&a.out, &render_evaluation(&prov, &eval))?;
    if let Some(e) = eval.report.rows.iter().find_map(|r| r.outcome.clone().err()) {
        return Err(e.into());
    }
    Ok(format!("{} grid points written to {}\n", eval.curve.rows.len(), a.out.display()))
}

fn run_oracle(a: &OracleArgs) -> Result<String> {
    let units = read_scores(&a.scores)?;
    let (ids, scores): (Vec<String>, Vec<f64>) = units.into_iter().unzip();
    let inst = OracleInstance::new(scores, a.k, a.budget)?;
    let set = |s: &[usize]| {
        let names: Vec<String> = s.iter().map(|&i| format!("{} ({})", ids[i], inst.scores()[i])).collect();
        format!("{{{}}}", names.join(", "))
    };

    let sol = oracle_solve(&inst)?;
    let mut out = String::new();
    let _ = writeln!(out, "units: {}  screen: {}  budget: {}", inst.len(), a.k, a.budget);
    let _ = writeln!(out, "sets_visited: {}", sol.sets_visited);
    let _ = writeln!(out, "best_value: {}", sol.best_value);
    let _ = writeln!(out, "argmax_sets: {}", sol.best_sets.len());
    for s in &sol.best_sets {
        let _ = writeln!(out, "  {}", set(s));
    }
    if a.verify {
        let report = verify_structure(&inst)?;
        let _ = writeln!(out, "structure: {}", if report.passed { "pass" } else { "FAIL" });
        if let Some(w) = &report.witness_set {
            let _ = writeln!(out, "  contiguous optimum: {}", set(w));
        }
        if let Some(g) = report.gap {
            let _ = writeln!(
                out,
                "  gap: unscreened {} lies between screened {} and {}",
                ids[g.unscreened], ids[g.below], ids[g.above]
            );
        }
        if let Some(m) = report.margin {
            let _ = writeln!(out, "  margin: allocated {} scores below screened {}", ids[m.allocated], ids[m.screened]);
        }
    }
    Ok(out)
}
