//! Independent cross-check for variational solutions: restrict the
//! trajectory to piecewise-linear elements on the time grid, evaluate the
//! cost with the midpoint rule on each interval, and solve the resulting
//! finite-dimensional saddle by alternating an exact minimization over the
//! node values with a golden-section maximization over the parameter.
//!
//! Nothing here reuses the stationarity equations or the analytic partials
//! of the main solver — only raw integrand evaluations — so agreement is
//! meaningful evidence rather than a tautology.

use nalgebra::DVector;

use crate::error::{Result, SolverError};
use crate::numerics::{newton_solve, NewtonConfig, TimeGrid};
use crate::problem::{BoundaryCase, UncertaintySet, VariationalProblem};

/// Options for [`oracle_solve`].
#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub n_nodes: usize,
    /// Cap on alternation rounds.
    pub max_rounds: usize,
    /// Inner Newton tolerance on the discrete cost gradient.
    pub grad_tol: f64,
    /// Alternation stops when both the parameter and the nodes move less
    /// than this between rounds.
    pub step_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            n_nodes: 201,
            max_rounds: 200,
            grad_tol: 1e-7,
            step_tol: 1e-7,
        }
    }
}

/// Result of a direct-discretization solve.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub cost: f64,
    /// Maximizing parameter (empty when the problem has none).
    pub a: Vec<f64>,
    /// Node values of the minimizing trajectory.
    pub x_nodes: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
}

/// Discrete model: scalar node values with pinned/free bookkeeping.
struct Discretization<'p> {
    problem: &'p VariationalProblem,
    grid: TimeGrid,
    /// Indices of nodes the minimizer may move.
    free: Vec<usize>,
}

impl<'p> Discretization<'p> {
    fn new(problem: &'p VariationalProblem, n_nodes: usize) -> Result<Self> {
        if problem.state_dim() != 1 {
            return Err(SolverError::InvalidProblem(
                "the direct-discretization check covers scalar-state problems only".into(),
            ));
        }
        if problem.param_dim() > 1 {
            return Err(SolverError::InvalidProblem(
                "the direct-discretization check covers at most one parameter".into(),
            ));
        }
        let boundary = problem.boundary();
        let (tf, free_end) = match &boundary.case {
            BoundaryCase::FixedTimeFixedState { tf, .. } => (*tf, false),
            BoundaryCase::FixedTimeFreeState { tf } => (*tf, true),
            _ => {
                return Err(SolverError::InvalidProblem(
                    "the direct-discretization check needs a fixed final time".into(),
                ))
            }
        };
        let grid = TimeGrid::new(boundary.t0, tf, n_nodes)?;
        let mut free: Vec<usize> = (1..n_nodes - 1).collect();
        if free_end {
            free.push(n_nodes - 1);
        }
        Ok(Self {
            problem,
            grid,
            free,
        })
    }

    fn initial_nodes(&self) -> Vec<f64> {
        let boundary = self.problem.boundary();
        let x0 = boundary.x0[0];
        let xf = boundary.case.fixed_xf().map_or(x0, |xf| xf[0]);
        let n = self.grid.n_nodes();
        (0..n)
            .map(|i| x0 + (xf - x0) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Per-interval midpoint samples of the piecewise-linear interpolant:
    /// `(x_mid, slope, t_mid)` for interval `i`.
    fn element(&self, x: &[f64], i: usize) -> (f64, f64, f64) {
        let h = self.grid.step();
        let x_mid = 0.5 * (x[i] + x[i + 1]);
        let slope = (x[i + 1] - x[i]) / h;
        let t_mid = self.grid.node(i) + 0.5 * h;
        (x_mid, slope, t_mid)
    }

    /// Discrete cost at given node values and parameter: midpoint rule on
    /// every interval of the piecewise-linear interpolant.
    fn cost(&self, x: &[f64], a: &[f64]) -> f64 {
        let g = self.problem.integrand();
        let h = self.grid.step();
        (0..self.grid.n_nodes() - 1)
            .map(|i| {
                let (xm, v, tm) = self.element(x, i);
                h * g.eval(&[xm], &[v], a, tm)
            })
            .sum()
    }

    /// Gradient of the discrete cost with respect to the free node values,
    /// assembled from raw finite differences of the integrand and the chain
    /// rule through the element interpolation.
    fn free_gradient(&self, x: &[f64], a: &[f64]) -> Vec<f64> {
        let g = self.problem.integrand();
        let h = self.grid.step();
        let n = self.grid.n_nodes();
        let mut grad = vec![0.0; n];
        for i in 0..n - 1 {
            let (xm, v, tm) = self.element(x, i);
            // Pointwise partials of the integrand by central differences of
            // the bare evaluation callback.
            let hx = 1e-6 * xm.abs().max(1.0);
            let gx =
                (g.eval(&[xm + hx], &[v], a, tm) - g.eval(&[xm - hx], &[v], a, tm)) / (2.0 * hx);
            let hv = 1e-6 * v.abs().max(1.0);
            let gv =
                (g.eval(&[xm], &[v + hv], a, tm) - g.eval(&[xm], &[v - hv], a, tm)) / (2.0 * hv);
            // d(h·g_i)/dx_i and /dx_{i+1} through midpoint and slope.
            grad[i] += 0.5 * h * gx - gv;
            grad[i + 1] += 0.5 * h * gx + gv;
        }
        self.free.iter().map(|&k| grad[k]).collect()
    }

    /// Exact minimization over the free nodes at fixed parameter.
    fn minimize_nodes(&self, x: &mut [f64], a: &[f64], options: &OracleOptions) -> Result<bool> {
        let z0 = DVector::from_vec(self.free.iter().map(|&k| x[k]).collect::<Vec<f64>>());
        let mut base = x.to_vec();
        let config = NewtonConfig {
            tol: options.grad_tol,
            max_iter: 50,
            ..NewtonConfig::default()
        };
        let outcome = newton_solve(
            |z| {
                for (slot, &k) in self.free.iter().enumerate() {
                    base[k] = z[slot];
                }
                Ok(DVector::from_vec(self.free_gradient(&base, a)))
            },
            &z0,
            &config,
        )?;
        for (slot, &k) in self.free.iter().enumerate() {
            x[k] = outcome.root[slot];
        }
        Ok(outcome.converged)
    }

    /// Golden-section maximization of the discrete cost over a scalar
    /// parameter, with bracket expansion (clipped to box bounds).
    fn maximize_param(&self, x: &[f64], a0: f64) -> f64 {
        let (mut lo_cap, mut hi_cap) = (f64::NEG_INFINITY, f64::INFINITY);
        if let UncertaintySet::Box { lower, upper } = self.problem.uncertainty() {
            lo_cap = lower[0];
            hi_cap = upper[0];
        }
        let phi = |a: f64| self.cost(x, &[a]);
        let mut radius = 1.0;
        let mut lo = (a0 - radius).max(lo_cap);
        let mut hi = (a0 + radius).min(hi_cap);
        // Expand until the maximum is interior or the set's edge is reached.
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (phi(lo), phi(mid), phi(hi));
            let need_left = flo > fmid && lo > lo_cap;
            let need_right = fhi > fmid && hi < hi_cap;
            if !need_left && !need_right {
                break;
            }
            radius *= 2.0;
            if need_left {
                lo = (a0 - radius).max(lo_cap);
            }
            if need_right {
                hi = (a0 + radius).min(hi_cap);
            }
        }
        // Golden-section search for the maximum on [lo, hi].
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let mut fc = phi(c);
        let mut fd = phi(d);
        while hi - lo > 1e-9 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = phi(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = phi(d);
            }
        }
        0.5 * (lo + hi)
    }
}

/// Solve the discretized saddle directly: repeat {exact minimization over
/// free node values, golden-section maximization over the parameter} until
/// neither side moves, starting the parameter at `a0`.
///
/// Covers scalar-state, fixed-final-time problems with at most one
/// parameter. Expected agreement with the trajectory solver is at the
/// element order (about `h²`), far looser than the solver's own tolerances
/// — which is the point: the two answers come from different machinery.
pub fn oracle_solve(
    problem: &VariationalProblem,
    a0: &[f64],
    options: &OracleOptions,
) -> Result<OracleOutcome> {
    if a0.len() != problem.param_dim() {
        return Err(SolverError::InvalidProblem(format!(
            "oracle parameter guess has {} components, expected {}",
            a0.len(),
            problem.param_dim()
        )));
    }
    let disc = Discretization::new(problem, options.n_nodes)?;
    let mut x = disc.initial_nodes();
    if problem.param_dim() == 0 {
        let converged = disc.minimize_nodes(&mut x, &[], options)?;
        let cost = disc.cost(&x, &[]);
        return Ok(OracleOutcome {
            cost,
            a: vec![],
            x_nodes: x,
            rounds: 1,
            converged,
        });
    }

    let mut a = a0[0];
    let mut converged = false;
    let mut rounds = 0;
    for round in 1..=options.max_rounds {
        rounds = round;
        let x_before = x.clone();
        let a_before = a;
        let min_ok = disc.minimize_nodes(&mut x, &[a], options)?;
        a = disc.maximize_param(&x, a);
        let dx = x
            .iter()
            .zip(x_before.iter())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0_f64, f64::max);
        let da = (a - a_before).abs();
        if min_ok && dx <= options.step_tol && da <= options.step_tol {
            converged = true;
            break;
        }
    }
    let cost = disc.cost(&x, &[a]);
    Ok(OracleOutcome {
        cost,
        a: vec![a],
        x_nodes: x,
        rounds,
        converged,
    })
}
