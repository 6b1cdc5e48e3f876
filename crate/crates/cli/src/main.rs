//! Command-line front end for the saddle-point solvers.
//!
//! Exit codes: 0 on success, 1 for usage or problem-definition errors, 2 when
//! a solve fails to converge (a record is still written), 3 when `verify`
//! finds a failed certification condition.

mod record;

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use record::{ConditionEntry, ConfigEcho, ScanSummary, SolutionRecord};
use varimax_core::{
    lookup, oc_saddle_probe, oracle_solve, pointwise_el_residual, registry, robust_scan,
    saddle_probe, solve_el, solve_oc, solve_oc_initial_uncertainty, AnyProblem, BoundaryCase,
    ElOptions, OCProblem, OcOptions, OracleOptions, ProbeOptions, SaddleClass, ScanOptions,
    SolverError, UncertaintySet, VariationalProblem,
};

#[derive(Parser)]
#[command(
    name = "varimax",
    version,
    about = "Find and certify min-max saddle points of uncertain variational and optimal-control problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a registered problem and write a solution record
    Solve(SolveArgs),
    /// Sweep frozen-parameter candidate controls over a parameter range and
    /// write the cost matrix as CSV
    Scan(ScanArgs),
    /// Re-derive the certification conditions for a problem and report
    /// PASS/FAIL/SKIP for each
    Verify(VerifyArgs),
    /// List the registered problems
    List,
}

#[derive(Args)]
struct SolveArgs {
    /// Registered problem name (see `varimax list`)
    #[arg(long)]
    problem: String,
    /// Solver to use; defaults to the problem's natural formulation
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    /// Grid nodes; overrides VARIMAX_N_NODES (default 1001)
    #[arg(long)]
    n_nodes: Option<usize>,
    /// Newton convergence tolerance on the residual infinity norm
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Maximum Newton iterations
    #[arg(long)]
    newton_max_iter: Option<usize>,
    /// Initial-guess overrides, e.g. "a=1.5,tf=0.5,xdot0=-1"; vector
    /// components separate with ';' or repeat the key
    #[arg(long)]
    guess: Option<String>,
    /// Output path (default "<problem>.json" or "<problem>.csv")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record format: full JSON record or trajectory-table CSV
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct ScanArgs {
    /// Registered optimal-control problem name
    #[arg(long)]
    problem: String,
    /// Lower end of the parameter range (pass with --a-max; defaults to the
    /// problem's own bounds)
    #[arg(long, allow_negative_numbers = true)]
    a_min: Option<f64>,
    /// Upper end of the parameter range
    #[arg(long, allow_negative_numbers = true)]
    a_max: Option<f64>,
    /// Grid points across the range
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Grid nodes for the underlying solves and replays
    #[arg(long)]
    n_nodes: Option<usize>,
    /// Initial-guess overrides for the interior solve, e.g. "p0=3;2.5,a=0.5"
    #[arg(long)]
    guess: Option<String>,
    /// CSV output path (default "<problem>-scan.csv"); a companion
    /// "<stem>.summary.json" is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Registered problem name
    #[arg(long)]
    problem: String,
    /// Grid nodes; overrides VARIMAX_N_NODES (default 1001)
    #[arg(long)]
    n_nodes: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    /// Euler-Lagrange shooting for variational problems
    El,
    /// Hamiltonian shooting for optimal-control problems
    Oc,
    /// Force the shifted-variable route for initial-state uncertainty
    OcInitialUncertainty,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Verify(args) => cmd_verify(args),
        Command::List => cmd_list(),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let non_convergence = err
                .downcast_ref::<SolverError>()
                .is_some_and(|e| matches!(e, SolverError::NonConvergence { .. }));
            if non_convergence {
                2
            } else {
                1
            }
        }
    }
}

/// Grid-size precedence: command-line flag, then VARIMAX_N_NODES, then 1001.
fn resolve_n_nodes(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("VARIMAX_N_NODES") {
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .with_context(|| format!("VARIMAX_N_NODES={raw:?} is not a valid node count")),
        Err(_) => Ok(1001),
    }
}

#[derive(Debug, Default, Clone)]
struct GuessOverride {
    a: Option<Vec<f64>>,
    xdot0: Option<Vec<f64>>,
    p0: Option<Vec<f64>>,
    tf: Option<f64>,
}

/// Parses "key=value" pairs separated by commas. Vector-valued keys take
/// ';'-separated components, and repeating a key appends further components.
fn parse_guess(spec: &str) -> Result<GuessOverride> {
    let mut out = GuessOverride::default();
    for pair in spec.split(',') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("guess entry {pair:?} is not of the form key=value"))?;
        let components: Vec<f64> = value
            .split(';')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("guess entry {pair:?} has a non-numeric component"))
            })
            .collect::<Result<_>>()?;
        match key.trim() {
            "a" => out.a.get_or_insert_with(Vec::new).extend(components),
            "xdot0" => out.xdot0.get_or_insert_with(Vec::new).extend(components),
            "p0" => out.p0.get_or_insert_with(Vec::new).extend(components),
            "tf" => {
                if components.len() != 1 {
                    bail!("guess entry tf takes exactly one value");
                }
                out.tf = Some(components[0]);
            }
            other => bail!("unknown guess key {other:?}; valid keys: a, tf, xdot0, p0"),
        }
    }
    Ok(out)
}

fn fmt_vec(values: &[f64]) -> String {
    match values {
        [] => "-".to_string(),
        [v] => format!("{v:.12}"),
        many => {
            let parts: Vec<String> = many.iter().map(|v| format!("{v:.12}")).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let entry = lookup(&args.problem)?;
    let overrides = args
        .guess
        .as_deref()
        .map(parse_guess)
        .transpose()?
        .unwrap_or_default();
    let n_nodes = resolve_n_nodes(args.n_nodes)?;

    let a_guess = overrides.a.clone().unwrap_or_else(|| entry.guess.a.clone());
    let tf_guess = overrides.tf.or(entry.guess.tf);
    let kind = args.solver.unwrap_or(match &entry.problem {
        AnyProblem::Variational(_) => SolverKind::El,
        AnyProblem::OptimalControl(_) => SolverKind::Oc,
    });

    let (record, converged) = match (&entry.problem, kind) {
        (AnyProblem::Variational(problem), SolverKind::El) => {
            let xdot0 = overrides
                .xdot0
                .clone()
                .or_else(|| entry.guess.xdot0.clone())
                .ok_or_else(|| {
                    anyhow!(
                        "problem {:?} needs an initial-slope guess; pass --guess xdot0=...",
                        args.problem
                    )
                })?;
            let mut options = ElOptions {
                n_nodes,
                ..Default::default()
            };
            if let Some(tol) = args.newton_tol {
                options.newton.tol = tol;
            }
            if let Some(iters) = args.newton_max_iter {
                options.newton.max_iter = iters;
            }
            let solution = solve_el(problem, &xdot0, &a_guess, tf_guess, &options)?;
            let conditions = el_conditions(problem, &solution)?;
            let config = ConfigEcho {
                n_nodes,
                newton_tol: options.newton.tol,
                newton_max_iter: options.newton.max_iter,
                guess_a: a_guess.clone(),
                guess_xdot0: Some(xdot0),
                guess_p0: None,
                guess_tf: tf_guess,
            };
            let converged = solution.converged;
            (
                SolutionRecord::from_el(&solution, "el", conditions, config),
                converged,
            )
        }
        (
            AnyProblem::OptimalControl(problem),
            SolverKind::Oc | SolverKind::OcInitialUncertainty,
        ) => {
            let p0 = overrides
                .p0
                .clone()
                .or_else(|| entry.guess.p0.clone())
                .ok_or_else(|| {
                    anyhow!(
                        "problem {:?} needs a costate guess; pass --guess p0=...",
                        args.problem
                    )
                })?;
            let mut options = OcOptions {
                n_nodes,
                ..Default::default()
            };
            if let Some(tol) = args.newton_tol {
                options.newton.tol = tol;
            }
            if let Some(iters) = args.newton_max_iter {
                options.newton.max_iter = iters;
            }
            let (solution, solver_name) = match kind {
                SolverKind::OcInitialUncertainty => (
                    solve_oc_initial_uncertainty(problem, &p0, &a_guess, tf_guess, &options)?,
                    "oc-initial-uncertainty",
                ),
                _ => (solve_oc(problem, &p0, &a_guess, tf_guess, &options)?, "oc"),
            };
            let conditions = oc_conditions(problem, &solution);
            let config = ConfigEcho {
                n_nodes,
                newton_tol: options.newton.tol,
                newton_max_iter: options.newton.max_iter,
                guess_a: a_guess.clone(),
                guess_xdot0: None,
                guess_p0: Some(p0),
                guess_tf: tf_guess,
            };
            let converged = solution.converged;
            (
                SolutionRecord::from_oc(&solution, solver_name, conditions, config),
                converged,
            )
        }
        (AnyProblem::Variational(_), _) => {
            bail!(
                "problem {:?} is variational; solve it with --solver el",
                args.problem
            )
        }
        (AnyProblem::OptimalControl(_), SolverKind::El) => {
            bail!(
                "problem {:?} is an optimal-control problem; solve it with --solver oc",
                args.problem
            )
        }
    };

    let extension = match args.format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.{extension}", args.problem)));
    match args.format {
        OutputFormat::Json => record.write_json(&out)?,
        OutputFormat::Csv => record.write_trajectory_csv(&out)?,
    }

    println!(
        "{}: {} | a* = {} | tf = {:.12} | J* = {:.12} | class = {} | residual = {:.3e} ({} iterations)",
        record.problem,
        if converged { "converged" } else { "did not converge" },
        fmt_vec(&record.a_star),
        record.tf,
        record.cost,
        record.classification,
        record.residual_norm,
        record.iterations,
    );
    println!("wrote {}", out.display());
    Ok(if converged { 0 } else { 2 })
}

fn el_conditions(
    problem: &VariationalProblem,
    solution: &varimax_core::ElSolution,
) -> Result<Vec<ConditionEntry>> {
    let m = problem.param_dim();
    let mut conditions = vec![ConditionEntry::new(
        "newton residual norm",
        solution.residual_norm,
        1e-8,
    )];
    let pointwise = pointwise_el_residual(problem, solution)?;
    conditions.push(ConditionEntry::new(
        "pointwise euler-lagrange residual",
        pointwise,
        1e-5,
    ));
    if m > 0 && !solution.frozen {
        conditions.push(ConditionEntry::new(
            "parameter stationarity",
            max_abs(&solution.residuals[..m]),
            1e-8,
        ));
    }
    let skip = if solution.frozen { 0 } else { m };
    conditions.push(ConditionEntry::new(
        "boundary residual",
        max_abs(&solution.residuals[skip..]),
        1e-8,
    ));
    Ok(conditions)
}

fn oc_conditions(problem: &OCProblem, solution: &varimax_core::OcSolution) -> Vec<ConditionEntry> {
    let m = problem.param_dim();
    let mut conditions = vec![
        ConditionEntry::new("newton residual norm", solution.residual_norm, 1e-8),
        ConditionEntry::new("control stationarity max |H_u|", solution.max_h_u, 1e-8),
    ];
    if m > 0 && !solution.frozen {
        conditions.push(ConditionEntry::new(
            "parameter stationarity",
            max_abs(&solution.residuals[..m]),
            1e-8,
        ));
    }
    let skip = if solution.frozen { 0 } else { m };
    conditions.push(ConditionEntry::new(
        "transversality residual",
        max_abs(&solution.residuals[skip..]),
        1e-8,
    ));
    conditions
}

fn cmd_scan(args: ScanArgs) -> Result<i32> {
    let entry = lookup(&args.problem)?;
    let AnyProblem::OptimalControl(problem) = &entry.problem else {
        bail!(
            "scan sweeps frozen optimal controls; {:?} is a variational problem",
            args.problem
        );
    };
    if problem.param_dim() != 1 {
        bail!(
            "scan writes a one-parameter CSV; {:?} has {} uncertain parameters",
            args.problem,
            problem.param_dim()
        );
    }
    let range = match (args.a_min, args.a_max) {
        (Some(lo), Some(hi)) => {
            if lo > hi {
                bail!("--a-min ({lo}) must not exceed --a-max ({hi})");
            }
            Some((lo, hi))
        }
        (None, None) => None,
        _ => bail!("pass both --a-min and --a-max, or neither"),
    };
    if args.steps == 0 {
        bail!("--steps must be at least 1");
    }

    let overrides = args
        .guess
        .as_deref()
        .map(parse_guess)
        .transpose()?
        .unwrap_or_default();
    let p0 = overrides
        .p0
        .or_else(|| entry.guess.p0.clone())
        .ok_or_else(|| {
            anyhow!(
                "problem {:?} needs a costate guess; pass --guess p0=...",
                args.problem
            )
        })?;
    let a_guess = overrides.a.unwrap_or_else(|| entry.guess.a.clone());
    let tf_guess = overrides.tf.or(entry.guess.tf);

    let mut options = ScanOptions {
        n_nodes: resolve_n_nodes(args.n_nodes)?,
        steps: args.steps,
        ..Default::default()
    };

    // A degenerate range (a_min == a_max) keeps the problem's own bounds for
    // candidate construction and evaluates the single requested point; a
    // proper range replaces the parameter box so both the boundary candidates
    // and the sweep follow it.
    let reboxed;
    let target: &OCProblem = match range {
        Some((lo, hi)) if hi > lo => {
            reboxed = problem.with_uncertainty(
                UncertaintySet::Box {
                    lower: vec![lo],
                    upper: vec![hi],
                },
                format!("{}#scan", problem.name()),
            )?;
            &reboxed
        }
        Some((lo, hi)) => {
            options.steps = 1;
            options.span = Some((vec![lo], vec![hi]));
            problem
        }
        None => problem,
    };

    let outcome = robust_scan(target, &p0, &a_guess, tf_guess, &options)?;
    let result = &outcome.result;
    let labels: Vec<String> = outcome.candidates.iter().map(|c| c.label.clone()).collect();

    let csv_path = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}-scan.csv", args.problem)));
    let mut csv = String::from("a");
    for label in &labels {
        csv.push_str(&format!(",J_{label}"));
    }
    csv.push('\n');
    for (k, point) in result.a_grid.iter().enumerate() {
        csv.push_str(&format!("{:.16e}", point[0]));
        for row in &result.cost_matrix {
            csv.push_str(&format!(",{:.16e}", row[k]));
        }
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv).with_context(|| format!("creating {}", csv_path.display()))?;

    let (a_min, a_max) = match (&options.span, range) {
        (Some((lo, hi)), _) => (lo.clone(), hi.clone()),
        (None, Some((lo, hi))) => (vec![lo], vec![hi]),
        (None, None) => {
            let (lo, hi) = target
                .uncertainty()
                .bounds()
                .expect("robust_scan requires a bounded set when no span is given");
            (lo.to_vec(), hi.to_vec())
        }
    };
    let summary = ScanSummary {
        problem: args.problem.clone(),
        labels: labels.clone(),
        frozen_a: outcome
            .candidates
            .iter()
            .map(|c| c.frozen_a.clone())
            .collect(),
        worst_case: result.worst_case.clone(),
        winner: result.winner,
        winner_label: labels[result.winner].clone(),
        steps: options.steps,
        a_min,
        a_max,
        n_nodes: options.n_nodes,
        interior_in_box: outcome.interior_in_box,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let summary_path = csv_path.with_extension("summary.json");
    summary.write_json(&summary_path)?;

    println!(
        "{}: {} candidates x {} grid points",
        args.problem,
        labels.len(),
        result.a_grid.len()
    );
    for (label, worst) in labels.iter().zip(&result.worst_case) {
        println!("  worst case J_{label} = {worst:.6}");
    }
    println!(
        "  winner: {} (lowest worst-case cost)",
        summary.winner_label
    );
    println!(
        "wrote {} and {}",
        csv_path.display(),
        summary_path.display()
    );
    Ok(0)
}

enum Status {
    Pass,
    Fail,
    Skip,
}

struct CheckRow {
    status: Status,
    name: String,
    detail: String,
}

impl CheckRow {
    fn gauge(name: &str, passed: bool, detail: String) -> Self {
        Self {
            status: if passed { Status::Pass } else { Status::Fail },
            name: name.to_string(),
            detail,
        }
    }

    fn skip(name: &str, detail: &str) -> Self {
        Self {
            status: Status::Skip,
            name: name.to_string(),
            detail: detail.to_string(),
        }
    }
}

const PROBE_AMPLITUDES: [f64; 2] = [0.01, 0.05];
const PROBE_COUNT: usize = 100;
const PROBE_SEED: u64 = 11;

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let entry = lookup(&args.problem)?;
    let n_nodes = resolve_n_nodes(args.n_nodes)?;
    let mut rows: Vec<CheckRow> = Vec::new();

    match &entry.problem {
        AnyProblem::Variational(problem) => {
            let xdot0 = entry.guess.xdot0.clone().ok_or_else(|| {
                anyhow!(
                    "registry entry {:?} lacks an initial-slope guess",
                    args.problem
                )
            })?;
            let options = ElOptions {
                n_nodes,
                ..Default::default()
            };
            let solution = solve_el(problem, &xdot0, &entry.guess.a, entry.guess.tf, &options)?;
            let m = problem.param_dim();

            rows.push(CheckRow::gauge(
                "solver converged",
                solution.converged,
                format!(
                    "{} iterations, residual {:.3e}",
                    solution.iterations, solution.residual_norm
                ),
            ));
            rows.push(CheckRow::gauge(
                "shooting residual <= 1e-8",
                solution.residual_norm <= 1e-8,
                format!("{:.3e}", solution.residual_norm),
            ));
            let pointwise = pointwise_el_residual(problem, &solution)?;
            rows.push(CheckRow::gauge(
                "pointwise euler-lagrange residual <= 1e-5",
                pointwise <= 1e-5,
                format!("{pointwise:.3e}"),
            ));
            if m > 0 {
                let stationarity = max_abs(&solution.residuals[..m]);
                rows.push(CheckRow::gauge(
                    "parameter stationarity <= 1e-8",
                    stationarity <= 1e-8,
                    format!("{stationarity:.3e}"),
                ));
            } else {
                rows.push(CheckRow::skip(
                    "parameter stationarity",
                    "no uncertain parameter",
                ));
            }
            rows.push(CheckRow::gauge(
                "classified min-max",
                solution.classification.class == SaddleClass::MinMax,
                solution.classification.class.label().to_string(),
            ));
            for amplitude in PROBE_AMPLITUDES {
                let report = saddle_probe(
                    problem,
                    &solution,
                    &ProbeOptions {
                        n_probes: PROBE_COUNT,
                        amplitude,
                        seed: PROBE_SEED,
                    },
                )?;
                rows.push(CheckRow::gauge(
                    &format!("saddle probe, amplitude {amplitude}"),
                    report.passed,
                    format!(
                        "trajectory side min {:+.3e}, parameter side max {:+.3e}",
                        report.trajectory_side_min, report.parameter_side_max
                    ),
                ));
            }

            let fixed_time = matches!(
                problem.boundary().case,
                BoundaryCase::FixedTimeFixedState { .. } | BoundaryCase::FixedTimeFreeState { .. }
            );
            if fixed_time
                && problem.state_dim() == 1
                && m == 1
                && solution.classification.class == SaddleClass::MinMax
            {
                let oracle = oracle_solve(problem, &entry.guess.a, &OracleOptions::default())?;
                let da = (oracle.a[0] - solution.a[0]).abs();
                let dj = (oracle.cost - solution.cost).abs();
                rows.push(CheckRow::gauge(
                    "independent discretized solve agrees to 5e-3",
                    oracle.converged && da <= 5e-3 && dj <= 5e-3,
                    format!("|da| = {da:.3e}, |dJ| = {dj:.3e}, {} rounds", oracle.rounds),
                ));
            } else {
                rows.push(CheckRow::skip(
                    "independent discretized solve",
                    "covers fixed-time scalar problems at a min-max point",
                ));
            }
        }
        AnyProblem::OptimalControl(problem) => {
            let p0 = entry.guess.p0.clone().ok_or_else(|| {
                anyhow!("registry entry {:?} lacks a costate guess", args.problem)
            })?;
            let options = OcOptions {
                n_nodes,
                ..Default::default()
            };
            let solution = solve_oc(problem, &p0, &entry.guess.a, entry.guess.tf, &options)?;
            let m = problem.param_dim();

            rows.push(CheckRow::gauge(
                "solver converged",
                solution.converged,
                format!(
                    "{} iterations, residual {:.3e}",
                    solution.iterations, solution.residual_norm
                ),
            ));
            rows.push(CheckRow::gauge(
                "shooting residual <= 1e-8",
                solution.residual_norm <= 1e-8,
                format!("{:.3e}", solution.residual_norm),
            ));
            rows.push(CheckRow::gauge(
                "control stationarity max |H_u| <= 1e-8",
                solution.max_h_u <= 1e-8,
                format!("{:.3e}", solution.max_h_u),
            ));
            if m > 0 {
                let stationarity = max_abs(&solution.residuals[..m]);
                rows.push(CheckRow::gauge(
                    "parameter stationarity <= 1e-8",
                    stationarity <= 1e-8,
                    format!("{stationarity:.3e}"),
                ));
            } else {
                rows.push(CheckRow::skip(
                    "parameter stationarity",
                    "no uncertain parameter",
                ));
            }
            rows.push(CheckRow::gauge(
                "classified min-max",
                solution.classification.class == SaddleClass::MinMax,
                solution.classification.class.label().to_string(),
            ));
            let free_terminal = matches!(
                problem.boundary().case,
                BoundaryCase::FixedTimeFreeState { .. } | BoundaryCase::FreeTimeFreeState
            );
            if free_terminal {
                for amplitude in PROBE_AMPLITUDES {
                    let report = oc_saddle_probe(
                        problem,
                        &solution,
                        &ProbeOptions {
                            n_probes: PROBE_COUNT,
                            amplitude,
                            seed: PROBE_SEED,
                        },
                    )?;
                    rows.push(CheckRow::gauge(
                        &format!("saddle probe, amplitude {amplitude}"),
                        report.passed,
                        format!(
                            "control side min {:+.3e}, parameter side max {:+.3e}",
                            report.trajectory_side_min, report.parameter_side_max
                        ),
                    ));
                }
            } else {
                rows.push(CheckRow::skip(
                    "saddle probe",
                    "terminal state is constrained; arbitrary control probes are inadmissible",
                ));
            }
            rows.push(CheckRow::skip(
                "independent discretized solve",
                "covers variational problems only",
            ));
        }
    }

    let mut any_fail = false;
    println!("verification of {:?} ({} nodes)", args.problem, n_nodes);
    for row in &rows {
        let tag = match row.status {
            Status::Pass => "PASS",
            Status::Fail => {
                any_fail = true;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("  {tag}  {:50} {}", row.name, row.detail);
    }
    println!("verification: {}", if any_fail { "FAIL" } else { "PASS" });
    Ok(if any_fail { 3 } else { 0 })
}

fn cmd_list() -> Result<i32> {
    println!("{:14} {:4} description", "name", "kind");
    for (name, entry) in registry() {
        let kind = match &entry.problem {
            AnyProblem::Variational(_) => "el",
            AnyProblem::OptimalControl(_) => "oc",
        };
        println!("{name:14} {kind:4} {}", entry.description);
    }
    Ok(0)
}
