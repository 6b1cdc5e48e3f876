//! Saddle-point solver for variational problems: shooting on the
//! second-order stationarity equation of the integrand, algebraic
//! stationarity in the constant parameter, endpoint conditions per boundary
//! case, second-order classification, and direct cost probes of the
//! saddle inequality.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{classify, ClassificationReport, SecondOrderSamples};
use crate::error::{Result, SolverError};
use crate::numerics::{
    newton_solve, norm_inf, quadrature, rk4_integrate, NewtonConfig, TimeGrid, Trajectory,
    TrajectoryRole,
};
use crate::problem::{BoundaryCase, ParamMode, UncertaintySet, VariationalProblem};

/// Smallest admissible horizon length when the final time is a solver
/// unknown, relative to the scale of `t0`.
pub(crate) fn min_horizon(t0: f64) -> f64 {
    1e-6 * (1.0 + t0.abs())
}

/// Right-hand side of the trajectory stationarity condition in first-order
/// form: given `(x, xdot)`, return `(xdot, xddot)` where `xddot` solves
///
/// ```text
/// g_ẋẋ · ẍ = g_x − g_ẋx · ẋ − g_ẋt
/// ```
///
/// (the total time derivative of `g_ẋ` equated to `g_x`). The integrand must
/// be non-degenerate in the state-derivative slot.
pub fn el_rhs(
    problem: &VariationalProblem,
    a: &[f64],
    t: f64,
    x: &[f64],
    xdot: &[f64],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let g = problem.integrand();
    let gvv = g.g_xdot_xdot(x, xdot, a, t);
    let min_abs_eig = gvv
        .symmetric_part()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|e| e.abs())
        .fold(f64::INFINITY, f64::min);
    if !min_abs_eig.is_finite() || min_abs_eig < 1e-12 {
        return Err(SolverError::InvalidProblem(format!(
            "integrand is degenerate in the state derivative at t = {t} \
             (smallest curvature magnitude {min_abs_eig:.3e})"
        )));
    }
    let gx = DVector::from_vec(g.g_x(x, xdot, a, t));
    let gvx = g.g_xdot_x(x, xdot, a, t);
    let gvt = DVector::from_vec(g.g_xdot_t(x, xdot, a, t));
    let v = DVector::from_column_slice(xdot);
    let rhs = gx - &gvx * &v - gvt;
    let xddot = gvv.lu().solve(&rhs).ok_or(SolverError::SingularJacobian {
        cond: f64::INFINITY,
    })?;
    Ok((v, xddot))
}

/// Solver unknowns for a variational problem: the initial slope, the
/// parameter (free or frozen), and the final time when the boundary case
/// leaves it free.
#[derive(Debug, Clone)]
pub struct ElUnknowns {
    pub xdot0: Vec<f64>,
    pub a: ParamMode,
    pub tf: Option<f64>,
}

impl ElUnknowns {
    fn pack(&self) -> DVector<f64> {
        let mut z: Vec<f64> = self.xdot0.clone();
        if let ParamMode::Free(a) = &self.a {
            z.extend_from_slice(a);
        }
        if let Some(tf) = self.tf {
            z.push(tf);
        }
        DVector::from_vec(z)
    }

    fn unpack(&self, z: &DVector<f64>) -> Self {
        let n = self.xdot0.len();
        let mut at = n;
        let xdot0 = z.as_slice()[..n].to_vec();
        let a = match &self.a {
            ParamMode::Free(a0) => {
                let a = z.as_slice()[at..at + a0.len()].to_vec();
                at += a0.len();
                ParamMode::Free(a)
            }
            ParamMode::Frozen(a0) => ParamMode::Frozen(a0.clone()),
        };
        let tf = self.tf.map(|_| z[at]);
        Self { xdot0, a, tf }
    }
}

/// Everything the residual assembly integrates once per evaluation.
struct ElPass {
    grid: TimeGrid,
    /// State samples per node.
    x: Vec<Vec<f64>>,
    /// State-derivative samples per node.
    v: Vec<Vec<f64>>,
    /// Shortfall `tf_raw − tf_used` when the free final time had to be
    /// clamped away from `t0` (zero otherwise).
    tf_penalty: f64,
}

fn integrate_pass(
    problem: &VariationalProblem,
    unknowns: &ElUnknowns,
    n_nodes: usize,
) -> Result<ElPass> {
    let boundary = problem.boundary();
    let n = problem.state_dim();
    let a = unknowns.a.value();
    let (tf_used, tf_penalty) = match boundary.case.fixed_tf() {
        Some(tf) => {
            if unknowns.tf.is_some() {
                return Err(SolverError::InvalidProblem(
                    "a final-time unknown was supplied for a fixed-time boundary".into(),
                ));
            }
            (tf, 0.0)
        }
        None => {
            let tf_raw = unknowns.tf.ok_or_else(|| {
                SolverError::InvalidProblem(
                    "a free-time boundary needs a final-time unknown".into(),
                )
            })?;
            let floor = boundary.t0 + min_horizon(boundary.t0);
            if tf_raw < floor {
                (floor, tf_raw - floor)
            } else {
                (tf_raw, 0.0)
            }
        }
    };
    let grid = TimeGrid::new(boundary.t0, tf_used, n_nodes)?;
    let mut z0 = boundary.x0.clone();
    z0.extend_from_slice(&unknowns.xdot0);
    let traj = rk4_integrate(
        &DVector::from_vec(z0),
        &grid,
        TrajectoryRole::State,
        |t, state| {
            let (x, v) = state.as_slice().split_at(n);
            let (xdot, xddot) = el_rhs(problem, a, t, x, v)?;
            let mut out = DVector::zeros(2 * n);
            out.rows_mut(0, n).copy_from(&xdot);
            out.rows_mut(n, n).copy_from(&xddot);
            Ok(out)
        },
    )?;
    let x = traj
        .values()
        .iter()
        .map(|s| s.as_slice()[..n].to_vec())
        .collect();
    let v = traj
        .values()
        .iter()
        .map(|s| s.as_slice()[n..].to_vec())
        .collect();
    Ok(ElPass {
        grid,
        x,
        v,
        tf_penalty,
    })
}

/// Assemble the residual vector for one unknown set: the parameter
/// stationarity components first (when the parameter is free), then the
/// boundary components for the problem's endpoint case.
pub fn assemble_el_residuals(
    problem: &VariationalProblem,
    unknowns: &ElUnknowns,
    n_nodes: usize,
) -> Result<DVector<f64>> {
    let pass = integrate_pass(problem, unknowns, n_nodes)?;
    let g = problem.integrand();
    let a = unknowns.a.value();
    let grid = &pass.grid;
    let last = grid.n_nodes() - 1;
    let tf = grid.tf();
    let (xf_val, vf_val) = (&pass.x[last], &pass.v[last]);

    let mut residuals: Vec<f64> = Vec::new();
    if unknowns.a.is_free() {
        let m = a.len();
        let mut ga_samples = vec![Vec::with_capacity(grid.n_nodes()); m];
        for i in 0..grid.n_nodes() {
            let ga = g.g_a(&pass.x[i], &pass.v[i], a, grid.node(i));
            for (k, sample) in ga.into_iter().enumerate() {
                ga_samples[k].push(sample);
            }
        }
        for samples in &ga_samples {
            residuals.push(quadrature(samples, grid)?);
        }
    }

    match &problem.boundary().case {
        BoundaryCase::FixedTimeFixedState { xf, .. } => {
            for (got, want) in xf_val.iter().zip(xf.iter()) {
                residuals.push(got - want);
            }
        }
        BoundaryCase::FixedTimeFreeState { .. } => {
            residuals.extend(g.g_xdot(xf_val, vf_val, a, tf));
        }
        BoundaryCase::FreeTimeFixedState { xf } => {
            for (got, want) in xf_val.iter().zip(xf.iter()) {
                residuals.push(got - want);
            }
            let gv = g.g_xdot(xf_val, vf_val, a, tf);
            let transversal = g.eval(xf_val, vf_val, a, tf)
                - vf_val
                    .iter()
                    .zip(gv.iter())
                    .map(|(v, gv)| v * gv)
                    .sum::<f64>();
            residuals.push(transversal + pass.tf_penalty);
        }
        BoundaryCase::FreeTimeFreeState => {
            residuals.extend(g.g_xdot(xf_val, vf_val, a, tf));
            residuals.push(g.eval(xf_val, vf_val, a, tf) + pass.tf_penalty);
        }
        BoundaryCase::SurfaceConstrained { theta, theta_dot } => {
            let target = theta(tf);
            for (got, want) in xf_val.iter().zip(target.iter()) {
                residuals.push(got - want);
            }
            let gv = g.g_xdot(xf_val, vf_val, a, tf);
            let td = theta_dot(tf);
            let transversal = g.eval(xf_val, vf_val, a, tf)
                + td.iter()
                    .zip(vf_val.iter())
                    .zip(gv.iter())
                    .map(|((td, v), gv)| (td - v) * gv)
                    .sum::<f64>();
            residuals.push(transversal + pass.tf_penalty);
        }
    }
    Ok(DVector::from_vec(residuals))
}

/// Options for [`solve_el`].
#[derive(Debug, Clone)]
pub struct ElOptions {
    pub n_nodes: usize,
    pub newton: NewtonConfig,
    /// Hold the parameter at this value instead of solving for it.
    pub freeze_a: Option<Vec<f64>>,
}

impl Default for ElOptions {
    fn default() -> Self {
        Self {
            n_nodes: 1001,
            newton: NewtonConfig::default(),
            freeze_a: None,
        }
    }
}

/// A solved variational problem.
#[derive(Debug, Clone)]
pub struct ElSolution {
    pub problem_name: String,
    /// Parameter value at the stationary pair (the frozen value when the
    /// parameter was held fixed).
    pub a: Vec<f64>,
    pub frozen: bool,
    pub xdot0: Vec<f64>,
    pub tf: f64,
    pub cost: f64,
    pub x: Trajectory,
    pub xdot: Trajectory,
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: ClassificationReport,
}

fn starting_unknowns(
    problem: &VariationalProblem,
    xdot0: &[f64],
    a: &[f64],
    tf: Option<f64>,
    freeze_a: &Option<Vec<f64>>,
) -> Result<ElUnknowns> {
    if xdot0.len() != problem.state_dim() {
        return Err(SolverError::InvalidProblem(format!(
            "initial-slope guess has {} components for a {}-dimensional state",
            xdot0.len(),
            problem.state_dim()
        )));
    }
    let a_mode = match freeze_a {
        Some(frozen) => {
            if frozen.len() != problem.param_dim() {
                return Err(SolverError::InvalidProblem(format!(
                    "frozen parameter has {} components, expected {}",
                    frozen.len(),
                    problem.param_dim()
                )));
            }
            ParamMode::Frozen(frozen.clone())
        }
        None => {
            if a.len() != problem.param_dim() {
                return Err(SolverError::InvalidProblem(format!(
                    "parameter guess has {} components, expected {}",
                    a.len(),
                    problem.param_dim()
                )));
            }
            ParamMode::Free(a.to_vec())
        }
    };
    let tf = match (problem.boundary().case.is_free_time(), tf) {
        (true, Some(tf)) => Some(tf),
        (true, None) => {
            return Err(SolverError::InvalidProblem(
                "a free-time problem needs a final-time guess".into(),
            ))
        }
        (false, _) => None,
    };
    Ok(ElUnknowns {
        xdot0: xdot0.to_vec(),
        a: a_mode,
        tf,
    })
}

/// Find a stationary pair by Newton iteration on
/// [`assemble_el_residuals`], then integrate the solution once more to
/// produce trajectories, the cost, and the second-order classification.
///
/// A non-converged Newton run still yields a solution record (flagged via
/// `converged = false`) so callers can inspect the best iterate.
pub fn solve_el(
    problem: &VariationalProblem,
    xdot0: &[f64],
    a: &[f64],
    tf: Option<f64>,
    options: &ElOptions,
) -> Result<ElSolution> {
    let template = starting_unknowns(problem, xdot0, a, tf, &options.freeze_a)?;
    let z0 = template.pack();
    let outcome = newton_solve(
        |z| assemble_el_residuals(problem, &template.unpack(z), options.n_nodes),
        &z0,
        &options.newton,
    )?;
    let solved = template.unpack(&outcome.root);
    let residuals = assemble_el_residuals(problem, &solved, options.n_nodes)?;
    let pass = integrate_pass(problem, &solved, options.n_nodes)?;
    let g = problem.integrand();
    let a_final = solved.a.value().to_vec();
    let grid = pass.grid.clone();

    let samples: Vec<f64> = (0..grid.n_nodes())
        .map(|i| g.eval(&pass.x[i], &pass.v[i], &a_final, grid.node(i)))
        .collect();
    let cost = quadrature(&samples, &grid)?;

    let m = problem.param_dim();
    let second_order = SecondOrderSamples {
        grid: grid.clone(),
        in_x: (0..grid.n_nodes())
            .map(|i| g.g_xx(&pass.x[i], &pass.v[i], &a_final, grid.node(i)))
            .collect(),
        in_xdot: (0..grid.n_nodes())
            .map(|i| g.g_xdot_xdot(&pass.x[i], &pass.v[i], &a_final, grid.node(i)))
            .collect(),
        in_a: (0..grid.n_nodes())
            .map(|i| {
                if m == 0 {
                    nalgebra::DMatrix::zeros(0, 0)
                } else {
                    g.g_aa(&pass.x[i], &pass.v[i], &a_final, grid.node(i))
                }
            })
            .collect(),
        boundary_in_a: None,
    };
    let classification = classify(&second_order)?;

    let x_values: Vec<DVector<f64>> = pass
        .x
        .iter()
        .map(|x| DVector::from_vec(x.clone()))
        .collect();
    let v_values: Vec<DVector<f64>> = pass
        .v
        .iter()
        .map(|v| DVector::from_vec(v.clone()))
        .collect();
    Ok(ElSolution {
        problem_name: problem.name().to_string(),
        a: a_final,
        frozen: !solved.a.is_free(),
        xdot0: solved.xdot0.clone(),
        tf: grid.tf(),
        cost,
        x: Trajectory::new(grid.clone(), x_values, TrajectoryRole::State)?,
        xdot: Trajectory::new(grid, v_values, TrajectoryRole::StateDerivative)?,
        residuals: residuals.as_slice().to_vec(),
        residual_norm: norm_inf(&residuals),
        iterations: outcome.iterations,
        converged: outcome.converged,
        classification,
    })
}

/// Options for [`saddle_probe`].
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    /// Probes per side.
    pub n_probes: usize,
    /// Perturbation amplitude; cost changes grow quadratically in it.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            n_probes: 16,
            amplitude: 1e-3,
            seed: 7,
        }
    }
}

/// Outcome of direct cost probes around a solution.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// Smallest observed `J(perturbed trajectory, a*) − J*`; a min-max
    /// saddle keeps this above `-tolerance`.
    pub trajectory_side_min: f64,
    /// Largest observed `J(x*, perturbed parameter) − J*`; a min-max saddle
    /// keeps this below `tolerance`.
    pub parameter_side_max: f64,
    pub tolerance: f64,
    pub n_probes: usize,
    pub passed: bool,
}

/// Probe the two-sided saddle inequality at a solution by direct cost
/// evaluation: admissible trajectory perturbations must not lower the cost,
/// and parameter perturbations must not raise it.
///
/// Trajectory perturbations vanish at `t0` always and at `tf` when the final
/// state is pinned; for free-time problems the probes hold the solved final
/// time fixed. The check is always oriented for a min-max point, so e.g. a
/// max-min point fails it by design.
pub fn saddle_probe(
    problem: &VariationalProblem,
    solution: &ElSolution,
    options: &ProbeOptions,
) -> Result<ProbeReport> {
    let g = problem.integrand();
    let grid = solution.x.grid().clone();
    let n_nodes = grid.n_nodes();
    let n = problem.state_dim();
    let m = problem.param_dim();
    let a = &solution.a;
    let span = grid.tf() - grid.t0();
    let xf_pinned = matches!(
        problem.boundary().case,
        BoundaryCase::FixedTimeFixedState { .. }
            | BoundaryCase::FreeTimeFixedState { .. }
            | BoundaryCase::SurfaceConstrained { .. }
    );
    let tolerance = 1e-9 * (1.0 + solution.cost.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    // Reference cost on the same grid and quadrature as the probes, so
    // discretization error cancels in the differences.
    let base_samples: Vec<f64> = (0..n_nodes)
        .map(|i| {
            g.eval(
                solution.x.value(i).as_slice(),
                solution.xdot.value(i).as_slice(),
                a,
                grid.node(i),
            )
        })
        .collect();
    let j_star = quadrature(&base_samples, &grid)?;

    let mut trajectory_side_min = f64::INFINITY;
    for k in 0..options.n_probes {
        // Mode number cycles 1, 2, 3, ...; coefficients are randomized per
        // state component. Half-integer modes leave the free endpoint
        // unpinned.
        let mode = (k % 4 + 1) as f64;
        let freq = if xf_pinned { mode } else { mode - 0.5 };
        let coef: Vec<f64> = (0..n)
            .map(|_| {
                options.amplitude
                    * rng.gen_range(0.5..1.5)
                    * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            })
            .collect();
        let omega = freq * std::f64::consts::PI / span;
        let mut samples = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let s = grid.node(i) - grid.t0();
            let bump = (omega * s).sin();
            let bump_dot = omega * (omega * s).cos();
            let x: Vec<f64> = solution
                .x
                .value(i)
                .iter()
                .zip(coef.iter())
                .map(|(x, c)| x + c * bump)
                .collect();
            let v: Vec<f64> = solution
                .xdot
                .value(i)
                .iter()
                .zip(coef.iter())
                .map(|(v, c)| v + c * bump_dot)
                .collect();
            samples.push(g.eval(&x, &v, a, grid.node(i)));
        }
        let j = quadrature(&samples, &grid)?;
        trajectory_side_min = trajectory_side_min.min(j - j_star);
    }

    let mut parameter_side_max = f64::NEG_INFINITY;
    if m == 0 {
        parameter_side_max = 0.0;
    } else {
        for _ in 0..options.n_probes {
            let mut da: Vec<f64> = (0..m)
                .map(|_| options.amplitude * rng.gen_range(-1.0..1.0))
                .collect();
            if da.iter().all(|d| d.abs() < 0.1 * options.amplitude) {
                da[0] = options.amplitude;
            }
            let mut a_probe: Vec<f64> = a.iter().zip(da.iter()).map(|(a, d)| a + d).collect();
            if let UncertaintySet::Box { lower, upper } = problem.uncertainty() {
                for ((ap, lo), hi) in a_probe.iter_mut().zip(lower.iter()).zip(upper.iter()) {
                    *ap = ap.clamp(*lo, *hi);
                }
            }
            let samples: Vec<f64> = (0..n_nodes)
                .map(|i| {
                    g.eval(
                        solution.x.value(i).as_slice(),
                        solution.xdot.value(i).as_slice(),
                        &a_probe,
                        grid.node(i),
                    )
                })
                .collect();
            let j = quadrature(&samples, &grid)?;
            parameter_side_max = parameter_side_max.max(j - j_star);
        }
    }

    let passed = trajectory_side_min >= -tolerance && parameter_side_max <= tolerance;
    Ok(ProbeReport {
        trajectory_side_min,
        parameter_side_max,
        tolerance,
        n_probes: options.n_probes,
        passed,
    })
}

/// Largest pointwise violation of the stationarity equation along a solved
/// trajectory, checked a posteriori: the total time derivative of the
/// state-derivative gradient is rebuilt by finite-differencing that
/// gradient's stored node values (second-order stencils, one-sided at the
/// ends), so the check shares nothing with the solver's own expansion of
/// the same equation.
pub fn pointwise_el_residual(problem: &VariationalProblem, solution: &ElSolution) -> Result<f64> {
    let g = problem.integrand();
    let grid = solution.x.grid();
    let n_nodes = grid.n_nodes();
    if n_nodes < 3 {
        return Err(SolverError::InvalidProblem(
            "the pointwise residual needs at least three nodes".into(),
        ));
    }
    let h = grid.step();
    let a = &solution.a;
    let gv: Vec<DVector<f64>> = (0..n_nodes)
        .map(|i| {
            DVector::from_vec(g.g_xdot(
                solution.x.value(i).as_slice(),
                solution.xdot.value(i).as_slice(),
                a,
                grid.node(i),
            ))
        })
        .collect();
    let mut worst = 0.0_f64;
    for i in 0..n_nodes {
        let dgv = if i == 0 {
            (-1.5 * &gv[0] + 2.0 * &gv[1] - 0.5 * &gv[2]) / h
        } else if i == n_nodes - 1 {
            (1.5 * &gv[i] - 2.0 * &gv[i - 1] + 0.5 * &gv[i - 2]) / h
        } else {
            (&gv[i + 1] - &gv[i - 1]) / (2.0 * h)
        };
        let gx = g.g_x(
            solution.x.value(i).as_slice(),
            solution.xdot.value(i).as_slice(),
            a,
            grid.node(i),
        );
        for (k, gxk) in gx.iter().enumerate() {
            worst = worst.max((gxk - dgv[k]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::SaddleClass;
    use crate::problem::{BoundarySpec, IntegrandDef, UncertaintySet};
    use crate::registry::{lookup, AnyProblem};

    /// Frozen reference values for ex1: a* = (1−e)/2, with the optimal
    /// trajectory x = a + (1−a)·cosh(t−1/2)/cosh(1/2), so
    /// ẋ(0) = −(1−a)·tanh(1/2), which equals a* numerically; J* = e − 1.
    const EX1_A: f64 = -0.859_140_914_229_522_5;
    const EX1_COST: f64 = 1.718_281_828_459_045;

    fn ex1() -> &'static VariationalProblem {
        match &lookup("ex1").unwrap().problem {
            AnyProblem::Variational(p) => p,
            _ => unreachable!(),
        }
    }

    fn ex(name: &str) -> &'static VariationalProblem {
        match &lookup(name).unwrap().problem {
            AnyProblem::Variational(p) => p,
            _ => panic!("{name} is variational"),
        }
    }

    #[test]
    fn el_rhs_matches_closed_form_acceleration() {
        // For g = x² + ẋ² − a² − 2ax the stationarity equation is ẍ = x − a.
        let p = ex1();
        let (v, acc) = el_rhs(p, &[0.3], 0.4, &[1.2], &[-0.7]).unwrap();
        assert_eq!(v[0], -0.7);
        assert!((acc[0] - (1.2 - 0.3)).abs() < 1e-9);
    }

    #[test]
    fn el_rhs_without_analytic_partials_agrees() {
        let fd_only = VariationalProblem::new(
            "fd-only",
            1,
            IntegrandDef::new(|x: &[f64], v: &[f64], a: &[f64], _t| {
                x[0] * x[0] + v[0] * v[0] - a[0] * a[0] - 2.0 * a[0] * x[0]
            }),
            BoundarySpec::new(
                0.0,
                vec![1.0],
                BoundaryCase::FixedTimeFixedState {
                    tf: 1.0,
                    xf: vec![1.0],
                },
            ),
            UncertaintySet::Unbounded { dim: 1 },
        )
        .unwrap();
        let (_, acc) = el_rhs(&fd_only, &[0.3], 0.4, &[1.2], &[-0.7]).unwrap();
        assert!((acc[0] - (1.2 - 0.3)).abs() < 1e-5);
    }

    #[test]
    fn el_rhs_rejects_degenerate_integrands() {
        let degenerate = VariationalProblem::new(
            "degenerate",
            1,
            IntegrandDef::new(|x: &[f64], v: &[f64], _a: &[f64], _t| x[0] * x[0] + v[0]),
            BoundarySpec::new(
                0.0,
                vec![0.0],
                BoundaryCase::FixedTimeFixedState {
                    tf: 1.0,
                    xf: vec![0.0],
                },
            ),
            UncertaintySet::Unbounded { dim: 0 },
        )
        .unwrap();
        let err = el_rhs(&degenerate, &[], 0.5, &[0.1], &[0.2]).unwrap_err();
        assert!(matches!(err, SolverError::InvalidProblem(_)));
    }

    #[test]
    fn residuals_vanish_at_the_known_ex1_solution() {
        let unknowns = ElUnknowns {
            xdot0: vec![EX1_A],
            a: ParamMode::Free(vec![EX1_A]),
            tf: None,
        };
        let r = assemble_el_residuals(ex1(), &unknowns, 2001).unwrap();
        assert_eq!(r.len(), 2);
        assert!(norm_inf(&r) < 1e-7, "residual norm {}", norm_inf(&r));
    }

    #[test]
    fn residuals_vanish_at_the_known_ex3_solution() {
        let unknowns = ElUnknowns {
            xdot0: vec![-2.0],
            a: ParamMode::Free(vec![2.0]),
            tf: Some(1.0 / 3.0),
        };
        let r = assemble_el_residuals(ex("ex3"), &unknowns, 2001).unwrap();
        assert_eq!(r.len(), 3);
        assert!(norm_inf(&r) < 1e-7, "residual norm {}", norm_inf(&r));
    }

    #[test]
    fn straight_line_solves_the_parameterless_fixed_endpoint_case() {
        let p = VariationalProblem::new(
            "kinetic",
            1,
            IntegrandDef::new(|_x: &[f64], v: &[f64], _a: &[f64], _t| v[0] * v[0]),
            BoundarySpec::new(
                0.0,
                vec![0.0],
                BoundaryCase::FixedTimeFixedState {
                    tf: 1.0,
                    xf: vec![1.0],
                },
            ),
            UncertaintySet::Unbounded { dim: 0 },
        )
        .unwrap();
        let unknowns = ElUnknowns {
            xdot0: vec![1.0],
            a: ParamMode::Free(vec![]),
            tf: None,
        };
        let r = assemble_el_residuals(&p, &unknowns, 101).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-10);
    }

    #[test]
    fn solve_ex1_hits_frozen_reference_values() {
        let entry = lookup("ex1").unwrap();
        let sol = solve_el(
            ex1(),
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            None,
            &ElOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!((sol.a[0] - EX1_A).abs() < 1e-8, "a = {}", sol.a[0]);
        assert!((sol.cost - EX1_COST).abs() < 1e-8, "J = {}", sol.cost);
        assert!((sol.xdot0[0] - EX1_A).abs() < 1e-6);
        assert_eq!(sol.classification.class, SaddleClass::MinMax);
        assert!((sol.classification.i_aa[(0, 0)] + 2.0).abs() < 1e-8);
        // Endpoints of the solved trajectory.
        assert!((sol.x.first()[0] - 1.0).abs() < 1e-12);
        assert!((sol.x.last()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solve_ex2_returns_the_trivial_saddle() {
        let entry = lookup("ex2").unwrap();
        let p = ex("ex2");
        let sol = solve_el(
            p,
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            None,
            &ElOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!(sol.a[0].abs() < 1e-9);
        assert!(sol.cost.abs() < 1e-9);
        assert!(sol.xdot0[0].abs() < 1e-9);
        assert_eq!(sol.classification.class, SaddleClass::MinMax);
        // Curvature triple (−2, 2, 2).
        assert!((sol.classification.i_aa[(0, 0)] + 2.0).abs() < 1e-8);
        assert!((sol.classification.x_curvature.0 - 2.0).abs() < 1e-8);
        assert!((sol.classification.xdot_curvature.0 - 2.0).abs() < 1e-8);
    }

    #[test]
    fn solve_ex3_hits_hand_values() {
        let entry = lookup("ex3").unwrap();
        let sol = solve_el(
            ex("ex3"),
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            entry.guess.tf,
            &ElOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!((sol.a[0] - 2.0).abs() < 1e-8, "a = {}", sol.a[0]);
        assert!((sol.tf - 1.0 / 3.0).abs() < 1e-8, "tf = {}", sol.tf);
        assert!((sol.cost - 4.0 / 3.0).abs() < 1e-8, "J = {}", sol.cost);
        assert!((sol.xdot0[0] + 2.0).abs() < 1e-7);
        assert_eq!(sol.classification.class, SaddleClass::MinMax);
        assert!(sol.classification.linear_in_x);
        assert!((sol.classification.i_aa[(0, 0)] + 5.0 / 9.0).abs() < 1e-8);
        assert!((sol.classification.xdot_curvature.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solve_ex4_hits_hand_values() {
        let entry = lookup("ex4").unwrap();
        let sol = solve_el(
            ex("ex4"),
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            entry.guess.tf,
            &ElOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!((sol.a[0] - 2.0).abs() < 1e-8, "a = {}", sol.a[0]);
        assert!((sol.tf - 1.0 / 3.0).abs() < 1e-8, "tf = {}", sol.tf);
        assert!((sol.cost - 4.0 / 3.0).abs() < 1e-8, "J = {}", sol.cost);
        assert!((sol.xdot0[0] + 4.0).abs() < 1e-7);
        assert_eq!(sol.classification.class, SaddleClass::MinMax);
        assert!((sol.classification.i_aa[(0, 0)] + 2.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn frozen_parameter_solves_only_the_trajectory_side() {
        let sol = solve_el(
            ex1(),
            &[-0.5],
            &[],
            None,
            &ElOptions {
                freeze_a: Some(vec![0.25]),
                ..ElOptions::default()
            },
        )
        .unwrap();
        assert!(sol.converged);
        assert!(sol.frozen);
        assert_eq!(sol.a, vec![0.25]);
        // Frozen solve satisfies the boundary but not parameter
        // stationarity; only one residual (the endpoint) is reported.
        assert_eq!(sol.residuals.len(), 1);
    }

    #[test]
    fn negated_problem_classifies_as_max_min() {
        let entry = lookup("ex1-neg").unwrap();
        let p = ex("ex1-neg");
        let sol = solve_el(
            p,
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            None,
            &ElOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        // Same stationary pair, opposite orientation.
        assert!((sol.a[0] - EX1_A).abs() < 1e-8);
        assert!((sol.cost + EX1_COST).abs() < 1e-8);
        assert_eq!(sol.classification.class, SaddleClass::MaxMin);
        assert!((sol.classification.i_aa[(0, 0)] - 2.0).abs() < 1e-8);
        assert!((sol.classification.x_curvature.1 + 2.0).abs() < 1e-8);
    }

    #[test]
    fn probe_confirms_ex1_and_rejects_its_negation() {
        let entry = lookup("ex1").unwrap();
        let sol = solve_el(
            ex1(),
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            None,
            &ElOptions::default(),
        )
        .unwrap();
        let report = saddle_probe(ex1(), &sol, &ProbeOptions::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.trajectory_side_min >= -report.tolerance);
        assert!(report.parameter_side_max <= report.tolerance);
        // Perturbations actually moved the cost (the probe is not vacuous).
        assert!(report.trajectory_side_min > 1e-8);
        assert!(report.parameter_side_max < -1e-8);

        let neg_entry = lookup("ex1-neg").unwrap();
        let neg = ex("ex1-neg");
        let neg_sol = solve_el(
            neg,
            neg_entry.guess.xdot0.as_ref().unwrap(),
            &neg_entry.guess.a,
            None,
            &ElOptions::default(),
        )
        .unwrap();
        let neg_report = saddle_probe(neg, &neg_sol, &ProbeOptions::default()).unwrap();
        assert!(!neg_report.passed);
    }

    #[test]
    fn probe_tolerances_scale_with_cost() {
        let entry = lookup("ex3").unwrap();
        let sol = solve_el(
            ex("ex3"),
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            entry.guess.tf,
            &ElOptions::default(),
        )
        .unwrap();
        let report = saddle_probe(ex("ex3"), &sol, &ProbeOptions::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!((report.tolerance - 1e-9 * (1.0 + sol.cost.abs())).abs() < 1e-18);
    }

    #[test]
    fn solver_guess_validation() {
        // Missing tf for a free-time case.
        assert!(solve_el(ex("ex3"), &[-1.5], &[1.5], None, &ElOptions::default()).is_err());
        // Wrong slope dimension.
        assert!(solve_el(ex1(), &[0.1, 0.2], &[0.0], None, &ElOptions::default()).is_err());
        // Wrong parameter dimension.
        assert!(solve_el(ex1(), &[0.1], &[0.0, 0.0], None, &ElOptions::default()).is_err());
    }

    #[test]
    fn scaling_invariance_of_the_stationary_pair() {
        // Scaling the integrand rescales cost and curvatures but not the
        // stationary pair itself.
        let p = ex1().scaled(2.5, "ex1-x2.5");
        let entry = lookup("ex1").unwrap();
        let sol = solve_el(
            &p,
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            None,
            &ElOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!((sol.a[0] - EX1_A).abs() < 1e-8);
        assert!((sol.cost - 2.5 * EX1_COST).abs() < 1e-7);
        assert_eq!(sol.classification.class, SaddleClass::MinMax);
    }
    #[test]
    fn pointwise_residual_is_small_on_solutions_and_large_off_them() {
        let entry = lookup("ex2").unwrap();
        let p = match &entry.problem {
            AnyProblem::Variational(p) => p,
            _ => unreachable!(),
        };
        let sol = solve_el(
            p,
            entry.guess.xdot0.as_ref().unwrap(),
            &entry.guess.a,
            entry.guess.tf,
            &ElOptions::default(),
        )
        .unwrap();
        let clean = pointwise_el_residual(p, &sol).unwrap();
        assert!(clean < 1e-5, "residual on the solution: {clean}");

        // Shifting the state while keeping the slopes breaks the equation
        // wherever the integrand depends on the state.
        let mut corrupted = sol.clone();
        let grid = corrupted.x.grid().clone();
        let shifted: Vec<DVector<f64>> = corrupted
            .x
            .values()
            .iter()
            .map(|v| v.add_scalar(0.1))
            .collect();
        corrupted.x = Trajectory::new(grid, shifted, TrajectoryRole::State).unwrap();
        let broken = pointwise_el_residual(p, &corrupted).unwrap();
        assert!(broken > 1e-2, "residual on the corrupted path: {broken}");
    }
}
