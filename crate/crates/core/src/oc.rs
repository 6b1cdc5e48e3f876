//! Saddle-point solver for optimal-control problems: single shooting on the
//! state/costate Hamiltonian system with pointwise control elimination,
//! integral parameter stationarity, the five endpoint condition variants,
//! and second-order classification on the augmented integrand. Problems
//! whose parameter offsets the initial state are solved through the
//! coordinate shift of [`transform_initial_uncertainty`].

use nalgebra::{DMatrix, DVector};

use crate::classify::{classify, ClassificationReport, SecondOrderSamples};
use crate::el::min_horizon;
use crate::error::{Result, SolverError};
use crate::numerics::{
    fd_step, newton_solve, norm_inf, quadrature, rk4_integrate, NewtonConfig, TimeGrid, Trajectory,
    TrajectoryRole,
};
use crate::problem::{
    fd_hessian, transform_initial_uncertainty, BoundaryCase, OCProblem, ParamMode,
    UncertaintyChannel, FD_SECOND_REL,
};

/// Relative step for control-slot derivatives of the Hamiltonian. The
/// pointwise control solve iterates to 1e-10, so the step is chosen well
/// above the rounding floor of a central difference at that accuracy.
pub const H_U_FD_REL: f64 = 1e-4;

/// Relative step for state- and parameter-slot derivatives of the
/// Hamiltonian and of the stationarity integrand.
pub const H_X_FD_REL: f64 = 1e-5;

/// The Hamiltonian `H = g + pᵀf`.
pub fn hamiltonian(problem: &OCProblem, x: &[f64], u: &[f64], p: &[f64], a: &[f64], t: f64) -> f64 {
    let f = (problem.dynamics())(x, u, a, t);
    let g = (problem.running_cost())(x, u, a, t);
    g + p.iter().zip(f.iter()).map(|(p, f)| p * f).sum::<f64>()
}

/// Control-slot gradient of the Hamiltonian by central differences.
pub fn hamiltonian_u(
    problem: &OCProblem,
    x: &[f64],
    u: &[f64],
    p: &[f64],
    a: &[f64],
    t: f64,
) -> Vec<f64> {
    let mut w = u.to_vec();
    let mut grad = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let h = fd_step(u[j], H_U_FD_REL);
        w[j] = u[j] + h;
        let hp = hamiltonian(problem, x, &w, p, a, t);
        w[j] = u[j] - h;
        let hm = hamiltonian(problem, x, &w, p, a, t);
        w[j] = u[j];
        grad.push((hp - hm) / (2.0 * h));
    }
    grad
}

/// State-slot gradient of the Hamiltonian (control held fixed).
fn hamiltonian_x(
    problem: &OCProblem,
    x: &[f64],
    u: &[f64],
    p: &[f64],
    a: &[f64],
    t: f64,
) -> Vec<f64> {
    let mut w = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let h = fd_step(x[j], H_X_FD_REL);
        w[j] = x[j] + h;
        let hp = hamiltonian(problem, &w, u, p, a, t);
        w[j] = x[j] - h;
        let hm = hamiltonian(problem, &w, u, p, a, t);
        w[j] = x[j];
        grad.push((hp - hm) / (2.0 * h));
    }
    grad
}

/// Parameter-slot gradient of the Hamiltonian (diagnostic; the solved
/// stationarity condition integrates this quantity).
pub fn hamiltonian_a(
    problem: &OCProblem,
    x: &[f64],
    u: &[f64],
    p: &[f64],
    a: &[f64],
    t: f64,
) -> Vec<f64> {
    let mut w = a.to_vec();
    let mut grad = Vec::with_capacity(a.len());
    for j in 0..a.len() {
        let h = fd_step(a[j], H_X_FD_REL);
        w[j] = a[j] + h;
        let hp = hamiltonian(problem, x, u, p, &w, t);
        w[j] = a[j] - h;
        let hm = hamiltonian(problem, x, u, p, &w, t);
        w[j] = a[j];
        grad.push((hp - hm) / (2.0 * h));
    }
    grad
}

/// Solve the pointwise control stationarity `H_u = 0` by Newton iteration
/// from `u_guess` (warm-started from the previous node during sweeps).
pub fn solve_pointwise_control(
    problem: &OCProblem,
    x: &[f64],
    p: &[f64],
    a: &[f64],
    t: f64,
    u_guess: &[f64],
) -> Result<DVector<f64>> {
    let config = NewtonConfig {
        tol: 1e-10,
        max_iter: 50,
        fd_step: H_U_FD_REL,
        ..NewtonConfig::default()
    };
    let outcome = newton_solve(
        |u| {
            Ok(DVector::from_vec(hamiltonian_u(
                problem,
                x,
                u.as_slice(),
                p,
                a,
                t,
            )))
        },
        &DVector::from_column_slice(u_guess),
        &config,
    )?;
    if !outcome.converged {
        return Err(SolverError::NonConvergence {
            context: format!("pointwise control stationarity at t = {t}"),
            iterations: outcome.iterations,
            residual: outcome.residual_norm,
        });
    }
    Ok(outcome.root)
}

/// Right-hand side of the Hamiltonian two-point system: eliminates the
/// control via [`solve_pointwise_control`], then returns
/// `(ẋ, ṗ, u) = (H_p, −H_x, u)` at the eliminated control. `H_p` is the
/// dynamics itself; the returned control doubles as the next warm start.
pub fn hamiltonian_rhs(
    problem: &OCProblem,
    a: &[f64],
    t: f64,
    x: &[f64],
    p: &[f64],
    u_guess: &[f64],
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let u = solve_pointwise_control(problem, x, p, a, t, u_guess)?;
    let f = (problem.dynamics())(x, u.as_slice(), a, t);
    let hx = hamiltonian_x(problem, x, u.as_slice(), p, a, t);
    let pdot = DVector::from_vec(hx.into_iter().map(|v| -v).collect::<Vec<f64>>());
    Ok((DVector::from_vec(f), pdot, u))
}

/// Solver unknowns for an optimal-control problem: the initial costate, the
/// parameter (free or frozen), and the final time when the boundary case
/// leaves it free.
#[derive(Debug, Clone)]
pub struct OcUnknowns {
    pub p0: Vec<f64>,
    pub a: ParamMode,
    pub tf: Option<f64>,
}

impl OcUnknowns {
    fn pack(&self) -> DVector<f64> {
        let mut z: Vec<f64> = self.p0.clone();
        if let ParamMode::Free(a) = &self.a {
            z.extend_from_slice(a);
        }
        if let Some(tf) = self.tf {
            z.push(tf);
        }
        DVector::from_vec(z)
    }

    fn unpack(&self, z: &DVector<f64>) -> Self {
        let n = self.p0.len();
        let mut at = n;
        let p0 = z.as_slice()[..n].to_vec();
        let a = match &self.a {
            ParamMode::Free(a0) => {
                let a = z.as_slice()[at..at + a0.len()].to_vec();
                at += a0.len();
                ParamMode::Free(a)
            }
            ParamMode::Frozen(a0) => ParamMode::Frozen(a0.clone()),
        };
        let tf = self.tf.map(|_| z[at]);
        Self { p0, a, tf }
    }
}

/// One forward sweep of the Hamiltonian system, with the running cost
/// accumulated as an extra integrated component.
struct OcPass {
    grid: TimeGrid,
    x: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    /// Integral of the running cost along the sweep.
    running: f64,
    /// Shortfall `tf_raw − tf_used` when the free final time had to be
    /// clamped away from `t0` (zero otherwise).
    tf_penalty: f64,
}

fn sweep(problem: &OCProblem, unknowns: &OcUnknowns, n_nodes: usize) -> Result<OcPass> {
    let boundary = problem.boundary();
    let n = problem.state_dim();
    let r = problem.control_dim();
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
    z0.extend_from_slice(&unknowns.p0);
    z0.push(0.0);
    let mut u_warm = vec![0.0; r];
    let traj = rk4_integrate(
        &DVector::from_vec(z0),
        &grid,
        TrajectoryRole::State,
        |t, z| {
            let (x, rest) = z.as_slice().split_at(n);
            let p = &rest[..n];
            let (xdot, pdot, u) = hamiltonian_rhs(problem, a, t, x, p, &u_warm)?;
            let g = (problem.running_cost())(x, u.as_slice(), a, t);
            u_warm.copy_from_slice(u.as_slice());
            let mut out = DVector::zeros(2 * n + 1);
            out.rows_mut(0, n).copy_from(&xdot);
            out.rows_mut(n, n).copy_from(&pdot);
            out[2 * n] = g;
            Ok(out)
        },
    )?;
    let x: Vec<Vec<f64>> = traj
        .values()
        .iter()
        .map(|z| z.as_slice()[..n].to_vec())
        .collect();
    let p: Vec<Vec<f64>> = traj
        .values()
        .iter()
        .map(|z| z.as_slice()[n..2 * n].to_vec())
        .collect();
    let running = traj.last()[2 * n];
    // Node controls, re-solved sequentially for output and diagnostics.
    let mut u_nodes = Vec::with_capacity(grid.n_nodes());
    let mut warm = vec![0.0; r];
    for i in 0..grid.n_nodes() {
        let u = solve_pointwise_control(problem, &x[i], &p[i], a, grid.node(i), &warm)?;
        warm.copy_from_slice(u.as_slice());
        u_nodes.push(u.as_slice().to_vec());
    }
    Ok(OcPass {
        grid,
        x,
        p,
        u: u_nodes,
        running,
        tf_penalty,
    })
}

/// Integrand of the parameter-stationarity condition at one node, as a
/// function of the parameter with the node's state, control, and costate
/// held fixed: the Hamiltonian plus the terminal-cost coupling terms
///
/// ```text
/// G(a′) = g + pᵀf (at a′)  +  h_x(x, a′, t)ᵀ ẋ  +  h_t(x, a′, t)
/// ```
///
/// where `ẋ` is the node's state derivative at the base parameter. For a
/// terminal cost without direct parameter dependence the h-terms are
/// constants in `a′` and the condition reduces to `∫ H_a dt = 0`; for
/// shifted problems they carry the extra initial-state-uncertainty terms.
fn stationarity_integrand(
    problem: &OCProblem,
    x: &[f64],
    u: &[f64],
    p: &[f64],
    xdot_base: &[f64],
    a: &[f64],
    t: f64,
) -> f64 {
    let h = problem.terminal();
    let hx = h.h_x(x, a, t);
    hamiltonian(problem, x, u, p, a, t)
        + hx.iter()
            .zip(xdot_base.iter())
            .map(|(h, v)| h * v)
            .sum::<f64>()
        + h.h_t(x, a, t)
}

/// Assemble the residual vector for one unknown set: the parameter
/// stationarity components first (when the parameter is free), then the
/// endpoint components for the problem's boundary case.
///
/// The stationarity block integrates the parameter derivative of the
/// augmented integrand over the horizon and adds the terminal cost's direct
/// parameter gradient evaluated at the initial point.
pub fn assemble_oc_residuals(
    problem: &OCProblem,
    unknowns: &OcUnknowns,
    n_nodes: usize,
) -> Result<DVector<f64>> {
    let pass = sweep(problem, unknowns, n_nodes)?;
    let a = unknowns.a.value();
    let grid = &pass.grid;
    let last = grid.n_nodes() - 1;
    let tf = grid.tf();
    let h = problem.terminal();
    let (x_f, p_f, u_f) = (&pass.x[last], &pass.p[last], &pass.u[last]);

    let mut residuals: Vec<f64> = Vec::new();
    if unknowns.a.is_free() {
        let m = a.len();
        // Per-node state derivatives at the base parameter.
        let xdot_base: Vec<Vec<f64>> = (0..grid.n_nodes())
            .map(|i| (problem.dynamics())(&pass.x[i], &pass.u[i], a, grid.node(i)))
            .collect();
        let mut w = a.to_vec();
        for k in 0..m {
            let step = fd_step(a[k], H_X_FD_REL);
            let mut samples = Vec::with_capacity(grid.n_nodes());
            for (i, xdot_i) in xdot_base.iter().enumerate() {
                let t = grid.node(i);
                w[k] = a[k] + step;
                let gp = stationarity_integrand(
                    problem, &pass.x[i], &pass.u[i], &pass.p[i], xdot_i, &w, t,
                );
                w[k] = a[k] - step;
                let gm = stationarity_integrand(
                    problem, &pass.x[i], &pass.u[i], &pass.p[i], xdot_i, &w, t,
                );
                w[k] = a[k];
                samples.push((gp - gm) / (2.0 * step));
            }
            let integral = quadrature(&samples, grid)?;
            let boundary_term = h.h_a(&pass.x[0], a, grid.t0())[k];
            residuals.push(integral + boundary_term);
        }
    }

    match &problem.boundary().case {
        BoundaryCase::FixedTimeFixedState { xf, .. } => {
            for (got, want) in x_f.iter().zip(xf.iter()) {
                residuals.push(got - want);
            }
        }
        BoundaryCase::FixedTimeFreeState { .. } => {
            let hx = h.h_x(x_f, a, tf);
            for (hx, p) in hx.iter().zip(p_f.iter()) {
                residuals.push(hx - p);
            }
        }
        BoundaryCase::FreeTimeFixedState { xf } => {
            for (got, want) in x_f.iter().zip(xf.iter()) {
                residuals.push(got - want);
            }
            let transversal = h.h_t(x_f, a, tf) + hamiltonian(problem, x_f, u_f, p_f, a, tf);
            residuals.push(transversal + pass.tf_penalty);
        }
        BoundaryCase::FreeTimeFreeState => {
            let hx = h.h_x(x_f, a, tf);
            for (hx, p) in hx.iter().zip(p_f.iter()) {
                residuals.push(hx - p);
            }
            let transversal = h.h_t(x_f, a, tf) + hamiltonian(problem, x_f, u_f, p_f, a, tf);
            residuals.push(transversal + pass.tf_penalty);
        }
        BoundaryCase::SurfaceConstrained { theta, theta_dot } => {
            let target = theta(tf);
            for (got, want) in x_f.iter().zip(target.iter()) {
                residuals.push(got - want);
            }
            let hx = h.h_x(x_f, a, tf);
            let td = theta_dot(tf);
            let transversal = hx
                .iter()
                .zip(p_f.iter())
                .zip(td.iter())
                .map(|((hx, p), td)| (hx - p) * td)
                .sum::<f64>()
                + h.h_t(x_f, a, tf)
                + hamiltonian(problem, x_f, u_f, p_f, a, tf);
            residuals.push(transversal + pass.tf_penalty);
        }
    }
    Ok(DVector::from_vec(residuals))
}

/// Options for [`solve_oc`].
#[derive(Debug, Clone)]
pub struct OcOptions {
    pub n_nodes: usize,
    pub newton: NewtonConfig,
    /// Hold the parameter at this value instead of solving for it.
    pub freeze_a: Option<Vec<f64>>,
}

impl Default for OcOptions {
    fn default() -> Self {
        Self {
            n_nodes: 1001,
            // The residuals carry finite-difference noise from the
            // stationarity integrand, so the outer tolerance sits above the
            // inner solves' 1e-10.
            newton: NewtonConfig::default().with_tol(1e-8),
            freeze_a: None,
        }
    }
}

/// A solved optimal-control problem.
#[derive(Debug, Clone)]
pub struct OcSolution {
    pub problem_name: String,
    /// Parameter value at the stationary pair (the frozen value when the
    /// parameter was held fixed).
    pub a: Vec<f64>,
    pub frozen: bool,
    pub p0: Vec<f64>,
    pub tf: f64,
    pub cost: f64,
    pub x: Trajectory,
    pub p: Trajectory,
    pub u: Trajectory,
    /// Shifted-coordinate state when the solve went through the
    /// initial-state transform.
    pub y: Option<Trajectory>,
    pub shifted: bool,
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: ClassificationReport,
    /// Hamiltonian value at every node (constant for autonomous fixed-time
    /// problems).
    pub hamiltonian_trace: Vec<f64>,
    /// Largest pointwise control-stationarity violation over the nodes.
    pub max_h_u: f64,
    /// Largest pointwise parameter gradient of the Hamiltonian over the
    /// nodes. Diagnostic only: the solved condition is the integral, and a
    /// nonzero pointwise value is expected off the special structure where
    /// the two coincide.
    pub max_h_a: f64,
}

fn starting_unknowns(
    problem: &OCProblem,
    p0: &[f64],
    a: &[f64],
    tf: Option<f64>,
    freeze_a: &Option<Vec<f64>>,
) -> Result<OcUnknowns> {
    if p0.len() != problem.state_dim() {
        return Err(SolverError::InvalidProblem(format!(
            "initial-costate guess has {} components for a {}-dimensional state",
            p0.len(),
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
    Ok(OcUnknowns {
        p0: p0.to_vec(),
        a: a_mode,
        tf,
    })
}

/// Second-order samples on the augmented integrand: the running cost plus
/// the costate pairing `pᵀ(f − ẋ)` and the terminal-cost coupling
/// `h_xᵀẋ + h_t`, with the node's control and costate held fixed. The
/// parameter block picks up the terminal cost's own parameter curvature at
/// the initial point as a boundary term.
fn classification_samples(problem: &OCProblem, pass: &OcPass, a: &[f64]) -> SecondOrderSamples {
    let grid = &pass.grid;
    let m = problem.param_dim();
    let h = problem.terminal();
    let mut in_x = Vec::with_capacity(grid.n_nodes());
    let mut in_xdot = Vec::with_capacity(grid.n_nodes());
    let mut in_a = Vec::with_capacity(grid.n_nodes());
    for i in 0..grid.n_nodes() {
        let t = grid.node(i);
        let (x_i, u_i, p_i) = (&pass.x[i], &pass.u[i], &pass.p[i]);
        let v_i = (problem.dynamics())(x_i, u_i, a, t);
        let g_f = |x: &[f64], v: &[f64], a: &[f64]| -> f64 {
            let f = (problem.dynamics())(x, u_i, a, t);
            let g = (problem.running_cost())(x, u_i, a, t);
            let hx = h.h_x(x, a, t);
            g + p_i
                .iter()
                .zip(f.iter().zip(v.iter()))
                .map(|(p, (f, v))| p * (f - v))
                .sum::<f64>()
                + hx.iter().zip(v.iter()).map(|(h, v)| h * v).sum::<f64>()
                + h.h_t(x, a, t)
        };
        in_x.push(fd_hessian(|xv| g_f(xv, &v_i, a), x_i, FD_SECOND_REL));
        in_xdot.push(fd_hessian(|vv| g_f(x_i, vv, a), &v_i, FD_SECOND_REL));
        in_a.push(if m == 0 {
            DMatrix::zeros(0, 0)
        } else {
            fd_hessian(|av| g_f(x_i, &v_i, av), a, FD_SECOND_REL)
        });
    }
    let boundary_in_a = if m == 0 {
        None
    } else {
        Some(h.h_aa(&pass.x[0], a, grid.t0()))
    };
    SecondOrderSamples {
        grid: grid.clone(),
        in_x,
        in_xdot,
        in_a,
        boundary_in_a,
    }
}

fn solve_oc_direct(
    problem: &OCProblem,
    unknowns: OcUnknowns,
    options: &OcOptions,
) -> Result<OcSolution> {
    let z0 = unknowns.pack();
    let outcome = newton_solve(
        |z| assemble_oc_residuals(problem, &unknowns.unpack(z), options.n_nodes),
        &z0,
        &options.newton,
    )?;
    let solved = unknowns.unpack(&outcome.root);
    let residuals = assemble_oc_residuals(problem, &solved, options.n_nodes)?;
    let pass = sweep(problem, &solved, options.n_nodes)?;
    let a_final = solved.a.value().to_vec();
    let grid = pass.grid.clone();
    let last = grid.n_nodes() - 1;

    let cost = pass.running + problem.terminal().eval(&pass.x[last], &a_final, grid.tf());
    let classification = classify(&classification_samples(problem, &pass, &a_final))?;

    let mut hamiltonian_trace = Vec::with_capacity(grid.n_nodes());
    let mut max_h_u = 0.0_f64;
    let mut max_h_a = 0.0_f64;
    for i in 0..grid.n_nodes() {
        let t = grid.node(i);
        let (x_i, u_i, p_i) = (&pass.x[i], &pass.u[i], &pass.p[i]);
        hamiltonian_trace.push(hamiltonian(problem, x_i, u_i, p_i, &a_final, t));
        for v in hamiltonian_u(problem, x_i, u_i, p_i, &a_final, t) {
            max_h_u = max_h_u.max(v.abs());
        }
        for v in hamiltonian_a(problem, x_i, u_i, p_i, &a_final, t) {
            max_h_a = max_h_a.max(v.abs());
        }
    }

    let to_traj = |values: &Vec<Vec<f64>>, role| -> Result<Trajectory> {
        Trajectory::new(
            grid.clone(),
            values
                .iter()
                .map(|v| DVector::from_vec(v.clone()))
                .collect(),
            role,
        )
    };
    Ok(OcSolution {
        problem_name: problem.name().to_string(),
        a: a_final,
        frozen: !solved.a.is_free(),
        p0: solved.p0.clone(),
        tf: grid.tf(),
        cost,
        x: to_traj(&pass.x, TrajectoryRole::State)?,
        p: to_traj(&pass.p, TrajectoryRole::Costate)?,
        u: to_traj(&pass.u, TrajectoryRole::Control)?,
        y: None,
        shifted: false,
        residuals: residuals.as_slice().to_vec(),
        residual_norm: norm_inf(&residuals),
        iterations: outcome.iterations,
        converged: outcome.converged,
        classification,
        hamiltonian_trace,
        max_h_u,
        max_h_a,
    })
}

/// Find a stationary pair by Newton iteration on
/// [`assemble_oc_residuals`], then sweep the solution once more to produce
/// trajectories, the cost, the classification, and the pointwise
/// diagnostics.
///
/// Problems declaring initial-state uncertainty are routed through
/// [`solve_oc_initial_uncertainty`] automatically. A non-converged Newton
/// run still yields a solution record (flagged via `converged = false`).
pub fn solve_oc(
    problem: &OCProblem,
    p0: &[f64],
    a: &[f64],
    tf: Option<f64>,
    options: &OcOptions,
) -> Result<OcSolution> {
    match problem.channel() {
        UncertaintyChannel::InitialState => {
            solve_oc_initial_uncertainty(problem, p0, a, tf, options)
        }
        UncertaintyChannel::Dynamics => {
            let unknowns = starting_unknowns(problem, p0, a, tf, &options.freeze_a)?;
            solve_oc_direct(problem, unknowns, options)
        }
    }
}

/// Solve a problem whose parameter offsets the initial state,
/// `x(t0) = x0 + a`: shift coordinates via
/// [`transform_initial_uncertainty`], solve the shifted problem (whose
/// terminal cost carries the extra stationarity and curvature terms), then
/// map the state back to original coordinates, `x = y + a*`.
pub fn solve_oc_initial_uncertainty(
    problem: &OCProblem,
    p0: &[f64],
    a: &[f64],
    tf: Option<f64>,
    options: &OcOptions,
) -> Result<OcSolution> {
    let transformed = transform_initial_uncertainty(problem)?;
    let shifted = transformed.shifted();
    let unknowns = starting_unknowns(shifted, p0, a, tf, &options.freeze_a)?;
    let mut solution = solve_oc_direct(shifted, unknowns, options)?;

    let grid = solution.x.grid().clone();
    let x_values: Vec<DVector<f64>> = solution
        .x
        .values()
        .iter()
        .map(|y| DVector::from_vec(transformed.back_map(y.as_slice(), &solution.a)))
        .collect();
    let y_values: Vec<DVector<f64>> = solution.x.values().to_vec();
    solution.y = Some(Trajectory::new(
        grid.clone(),
        y_values,
        TrajectoryRole::ShiftedState,
    )?);
    solution.x = Trajectory::new(grid, x_values, TrajectoryRole::State)?;
    solution.shifted = true;
    solution.problem_name = problem.name().to_string();
    Ok(solution)
}
