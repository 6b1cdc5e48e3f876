//! Shared numerical kernel: uniform time grids, sampled trajectories,
//! fixed-step RK4 integration, composite quadrature, finite differences, and
//! a damped Newton root-finder.
//!
//! Every solver in this crate is built from these pieces, so their defaults
//! (step sizes, tolerances, damping schedule) are chosen once here and reused.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SolverError};

/// Relative step for first-derivative central differences on model
/// callbacks: `h = 1e-6 * max(1, |z|)`.
pub const FD_FIRST_REL: f64 = 1e-6;

/// Uniform discretization of `[t0, tf]` with `n_nodes` nodes (so
/// `n_nodes - 1` equal steps).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    n_nodes: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, n_nodes: usize) -> Result<Self> {
        if !t0.is_finite() || !tf.is_finite() || tf <= t0 {
            return Err(SolverError::InvalidProblem(format!(
                "time grid needs finite tf > t0, got [{t0}, {tf}]"
            )));
        }
        if n_nodes < 2 {
            return Err(SolverError::InvalidProblem(format!(
                "time grid needs at least 2 nodes, got {n_nodes}"
            )));
        }
        Ok(Self { t0, tf, n_nodes })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Uniform step `(tf - t0) / (n_nodes - 1)`.
    pub fn step(&self) -> f64 {
        (self.tf - self.t0) / (self.n_nodes - 1) as f64
    }

    /// Time at node `i`. The last node is exactly `tf` so boundary residuals
    /// are evaluated at the true endpoint.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_nodes);
        if i + 1 == self.n_nodes {
            self.tf
        } else {
            self.t0 + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }
}

/// What a sampled trajectory represents, so downstream code and serialized
/// records can label columns without guessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryRole {
    State,
    Costate,
    Control,
    /// State of a shifted-coordinate problem (`y = x - a`).
    ShiftedState,
    StateDerivative,
}

/// Vector-valued samples on a [`TimeGrid`], one value per node.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    values: Vec<DVector<f64>>,
    role: TrajectoryRole,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, values: Vec<DVector<f64>>, role: TrajectoryRole) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(SolverError::InvalidProblem(format!(
                "trajectory has {} samples but the grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(SolverError::InvalidProblem(
                "trajectory samples have inconsistent dimensions".into(),
            ));
        }
        Ok(Self { grid, values, role })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn role(&self) -> TrajectoryRole {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn first(&self) -> &DVector<f64> {
        self.values.first().expect("trajectory is never empty")
    }

    pub fn last(&self) -> &DVector<f64> {
        self.values.last().expect("trajectory is never empty")
    }

    /// Scalar samples of component `k` across all nodes.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }

    /// Time derivative at node `i` from the samples alone: second-order
    /// central differences in the interior and second-order one-sided
    /// stencils at the endpoints (first-order when only two nodes exist).
    pub fn derivative(&self, i: usize) -> DVector<f64> {
        let n = self.grid.n_nodes();
        let h = self.grid.step();
        let v = &self.values;
        if n == 2 {
            return (&v[1] - &v[0]) / h;
        }
        if i == 0 {
            (-3.0 * &v[0] + 4.0 * &v[1] - &v[2]) / (2.0 * h)
        } else if i + 1 == n {
            (3.0 * &v[n - 1] - 4.0 * &v[n - 2] + &v[n - 3]) / (2.0 * h)
        } else {
            (&v[i + 1] - &v[i - 1]) / (2.0 * h)
        }
    }

    /// Derivatives at every node, as a new trajectory.
    pub fn derivative_trajectory(&self) -> Trajectory {
        let values = (0..self.grid.n_nodes())
            .map(|i| self.derivative(i))
            .collect();
        Trajectory {
            grid: self.grid.clone(),
            values,
            role: TrajectoryRole::StateDerivative,
        }
    }
}

/// Integrate `dx/dt = rhs(t, x)` across `grid` with the classical
/// fourth-order Runge-Kutta scheme, sampling the state at every node.
///
/// The right-hand side may fail (e.g. an inner solve inside it); any
/// non-finite state is reported as [`SolverError::IntegrationDiverged`] with
/// the node index at which it was detected.
pub fn rk4_integrate<F>(
    x0: &DVector<f64>,
    grid: &TimeGrid,
    role: TrajectoryRole,
    mut rhs: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let n = grid.n_nodes();
    let h = grid.step();
    let mut values = Vec::with_capacity(n);
    let mut x = x0.clone();
    if !x.iter().all(|c| c.is_finite()) {
        return Err(SolverError::IntegrationDiverged { node: 0 });
    }
    values.push(x.clone());
    for i in 0..n - 1 {
        let t = grid.node(i);
        let k1 = rhs(t, &x)?;
        let k2 = rhs(t + 0.5 * h, &(&x + 0.5 * h * &k1))?;
        let k3 = rhs(t + 0.5 * h, &(&x + 0.5 * h * &k2))?;
        let k4 = rhs(t + h, &(&x + h * &k3))?;
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.iter().all(|c| c.is_finite()) {
            return Err(SolverError::IntegrationDiverged { node: i + 1 });
        }
        values.push(x.clone());
    }
    Trajectory::new(grid.clone(), values, role)
}

/// Node weights of the quadrature rule used by [`quadrature`]: composite
/// Simpson when the node count is odd (even number of intervals), composite
/// trapezoid otherwise.
pub fn quadrature_weights(grid: &TimeGrid) -> Vec<f64> {
    let n = grid.n_nodes();
    let h = grid.step();
    if n % 2 == 1 {
        (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                }
            })
            .collect()
    } else {
        (0..n)
            .map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
            .collect()
    }
}

/// Integrate scalar samples over the grid with the weights from
/// [`quadrature_weights`].
pub fn quadrature(samples: &[f64], grid: &TimeGrid) -> Result<f64> {
    let n = grid.n_nodes();
    if samples.len() != n {
        return Err(SolverError::InvalidProblem(format!(
            "quadrature got {} samples for a {}-node grid",
            samples.len(),
            n
        )));
    }
    Ok(quadrature_weights(grid)
        .iter()
        .zip(samples.iter())
        .map(|(w, s)| w * s)
        .sum())
}

/// Step size for a central difference around `z`: `rel * max(1, |z|)`.
pub fn fd_step(z: f64, rel: f64) -> f64 {
    rel * z.abs().max(1.0)
}

/// Second-order central difference of a scalar function of one variable.
pub fn central_diff<F: FnMut(f64) -> f64>(mut f: F, z: f64, h: f64) -> f64 {
    (f(z + h) - f(z - h)) / (2.0 * h)
}

/// Central second difference of a scalar function of one variable.
pub fn second_diff<F: FnMut(f64) -> f64>(mut f: F, z: f64, h: f64) -> f64 {
    (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h)
}

/// Gradient of `f` at `z` by central differences with per-component relative
/// step `rel`.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, z: &[f64], rel: f64) -> Vec<f64> {
    let mut work = z.to_vec();
    let mut grad = Vec::with_capacity(z.len());
    for k in 0..z.len() {
        let h = fd_step(z[k], rel);
        work[k] = z[k] + h;
        let fp = f(&work);
        work[k] = z[k] - h;
        let fm = f(&work);
        work[k] = z[k];
        grad.push((fp - fm) / (2.0 * h));
    }
    grad
}

/// Jacobian of a vector-valued map by central differences, column by column.
pub fn fd_jacobian<F>(f: &mut F, z: &DVector<f64>, rel: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = z.len();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut work = z.clone();
    for k in 0..n {
        let h = fd_step(z[k], rel);
        work[k] = z[k] + h;
        let fp = f(&work)?;
        work[k] = z[k] - h;
        let fm = f(&work)?;
        work[k] = z[k];
        columns.push((fp - fm) / (2.0 * h));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, n, |i, j| columns[j][i]))
}

/// Infinity norm that tolerates empty vectors.
pub fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Configuration for [`newton_solve`].
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Convergence threshold on the residual infinity norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative step for the finite-difference Jacobian.
    pub fd_step: f64,
    /// Damping factors tried in order; the first that strictly reduces the
    /// residual norm is accepted.
    pub damping: Vec<f64>,
    /// Condition-number estimate above which the Jacobian is rejected.
    pub cond_limit: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            fd_step: 1e-7,
            damping: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
            cond_limit: 1e14,
        }
    }
}

impl NewtonConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Result of a Newton run. `converged` is false when the iteration budget
/// ran out or no damped step could reduce the residual; `root` is then the
/// best iterate seen.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub root: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton iteration on `F(z) = 0` with a finite-difference Jacobian.
///
/// Residual evaluations that fail during a damped trial reject that trial
/// rather than aborting the solve, so steps that would drive an inner
/// integration unstable are simply shortened. A singular or severely
/// ill-conditioned Jacobian is a hard error.
pub fn newton_solve<F>(mut f: F, z0: &DVector<f64>, config: &NewtonConfig) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if z0.is_empty() {
        return Ok(NewtonOutcome {
            root: z0.clone(),
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut z = z0.clone();
    let mut fz = f(&z)?;
    let mut norm = norm_inf(&fz);
    let mut best = (z.clone(), norm);
    for iter in 0..config.max_iter {
        if norm <= config.tol {
            return Ok(NewtonOutcome {
                root: z,
                residual_norm: norm,
                iterations: iter,
                converged: true,
            });
        }
        let jac = fd_jacobian(&mut f, &z, config.fd_step)?;
        let cond = condition_estimate(&jac);
        if !cond.is_finite() || cond > config.cond_limit {
            return Err(SolverError::SingularJacobian { cond });
        }
        let neg = -&fz;
        let dz = jac
            .lu()
            .solve(&neg)
            .ok_or(SolverError::SingularJacobian { cond })?;
        let mut accepted = false;
        for &lambda in &config.damping {
            let trial = &z + lambda * &dz;
            if let Ok(ft) = f(&trial) {
                let tn = norm_inf(&ft);
                if tn.is_finite() && tn < norm {
                    z = trial;
                    fz = ft;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
        }
        if norm < best.1 {
            best = (z.clone(), norm);
        }
        if !accepted {
            // Stalled: no damping factor makes progress from here.
            return Ok(NewtonOutcome {
                root: best.0,
                residual_norm: best.1,
                iterations: iter + 1,
                converged: best.1 <= config.tol,
            });
        }
    }
    let converged = best.1 <= config.tol;
    Ok(NewtonOutcome {
        root: best.0,
        residual_norm: best.1,
        iterations: config.max_iter,
        converged,
    })
}

/// Infinity-norm condition estimate `‖J‖ · ‖J⁻¹‖`; infinite when the matrix
/// is not invertible.
fn condition_estimate(jac: &DMatrix<f64>) -> f64 {
    let norm = inf_matrix_norm(jac);
    match jac.clone().try_inverse() {
        Some(inv) => norm * inf_matrix_norm(&inv),
        None => f64::INFINITY,
    }
}

fn inf_matrix_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}
