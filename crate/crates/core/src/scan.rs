//! Bounded-uncertainty candidate comparison.
//!
//! When the unconstrained stationary parameter falls outside a box
//! uncertainty set, the stationarity system no longer certifies a worst
//! case: the maximizing parameter sits on the boundary of the box instead.
//! This module generates the boundary candidates (box vertices), solves the
//! frozen-parameter problem for each, replays every candidate control
//! open-loop across a parameter grid, and selects the control whose worst
//! cost over the box is smallest.
//!
//! The replay is deliberately naive: the stored control signal is
//! interpolated and substituted into the state equation, which is then
//! integrated forward under the probed parameter value. Nothing from the
//! stationarity machinery is reused, so the comparison doubles as an
//! independent check on the reported costs.

use nalgebra::DVector;

use crate::el::{ProbeOptions, ProbeReport};
use crate::error::{Result, SolverError};
use crate::numerics::{rk4_integrate, Trajectory, TrajectoryRole};
use crate::oc::{solve_oc, OcOptions, OcSolution};
use crate::problem::{OCProblem, UncertaintyChannel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest number of box vertices expanded into boundary candidates.
pub const DEFAULT_VERTEX_CAP: usize = 64;

/// Largest number of grid points a scan will evaluate per candidate.
const GRID_POINT_CAP: usize = 1_000_000;

/// Tolerance used for box membership tests on grid points and stationary
/// parameters (absolute, per component).
const BOX_MEMBERSHIP_TOL: f64 = 1e-9;

/// One control entered in the worst-case comparison: the interior
/// (unconstrained) solution or a frozen-parameter boundary solve.
#[derive(Debug, Clone)]
pub struct CandidateControl {
    /// Display label; the interior candidate is "u", boundary candidates
    /// are "u1", "u2", ... in vertex order.
    pub label: String,
    /// Parameter the candidate was solved at, or `None` for the interior
    /// solve with the parameter free.
    pub frozen_a: Option<Vec<f64>>,
    pub solution: OcSolution,
}

/// Outcome of sweeping every candidate control across a parameter grid.
#[derive(Debug, Clone)]
pub struct ScanResult {
    /// Grid points, each a full parameter vector.
    pub a_grid: Vec<Vec<f64>>,
    /// Whether each grid point lies inside the uncertainty set; points
    /// outside are reported in the matrix but excluded from `worst_case`.
    pub in_box: Vec<bool>,
    /// `cost_matrix[c][k]` = cost of candidate `c` replayed at grid point
    /// `k`; NaN marks a cell whose evaluation failed.
    pub cost_matrix: Vec<Vec<f64>>,
    /// Per-candidate maximum cost over the in-box grid points; infinite for
    /// candidates disqualified by a failed cell.
    pub worst_case: Vec<f64>,
    /// Index of the candidate with the smallest worst case (ties broken by
    /// lowest index).
    pub winner: usize,
}

/// Settings for [`robust_scan`].
#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Node count for the candidate solves (and hence the replay grid).
    pub n_nodes: usize,
    /// Grid points per parameter dimension.
    pub steps: usize,
    /// Explicit grid span `(lower, upper)` per component; defaults to the
    /// problem's box. Required for unbounded sets, and useful for scanning
    /// beyond the box.
    pub span: Option<(Vec<f64>, Vec<f64>)>,
    /// Upper bound on the number of boundary vertices expanded.
    pub vertex_cap: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            n_nodes: 1001,
            steps: 101,
            span: None,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

/// A full comparison run: the candidate set and the scan over the grid.
#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub candidates: Vec<CandidateControl>,
    pub result: ScanResult,
    /// Whether the unconstrained stationary parameter already lies inside
    /// the uncertainty set (in which case no boundary candidates exist).
    pub interior_in_box: bool,
}

/// Samples a stored control trajectory at an arbitrary time using a
/// Catmull-Rom cubic through the four surrounding nodes (quadratic
/// extrapolation supplies the ghost nodes at either end). Third-order
/// accurate, which keeps the replay integration at the accuracy of the
/// underlying fourth-order stepper for practical node counts.
fn control_at(control: &Trajectory, t: f64) -> DVector<f64> {
    let grid = control.grid();
    let n = grid.n_nodes();
    if n == 1 {
        return control.value(0).clone();
    }
    let h = grid.step();
    let raw = (t - grid.t0()) / h;
    let i = (raw.floor() as isize).clamp(0, n as isize - 2) as usize;
    let s = (raw - i as f64).clamp(0.0, 1.0);

    let node = |j: isize| -> DVector<f64> {
        if j < 0 {
            // Quadratic extrapolation below the first node.
            3.0 * control.value(0) - 3.0 * control.value(1) + control.value(2)
        } else if j as usize >= n {
            3.0 * control.value(n - 1) - 3.0 * control.value(n - 2) + control.value(n - 3)
        } else {
            control.value(j as usize).clone()
        }
    };
    let (u0, u1) = (node(i as isize), node(i as isize + 1));
    let m0 = 0.5 * (node(i as isize + 1) - node(i as isize - 1));
    let m1 = 0.5 * (node(i as isize + 2) - node(i as isize));

    let s2 = s * s;
    let s3 = s2 * s;
    let (h00, h10, h01, h11) = (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    );
    h00 * u0 + h10 * m0 + h01 * u1 + h11 * m1
}

/// Replays a fixed control signal open-loop at the given parameter value:
/// integrates the state equation forward under the interpolated control and
/// returns the total cost (running integral plus terminal term). For
/// initial-state uncertainty the start point is shifted by the parameter.
pub fn evaluate_cost_at(problem: &OCProblem, control: &Trajectory, a: &[f64]) -> Result<f64> {
    if a.len() != problem.param_dim() {
        return Err(SolverError::InvalidProblem(format!(
            "parameter has {} components, problem {} expects {}",
            a.len(),
            problem.name(),
            problem.param_dim()
        )));
    }
    if control.dim() != problem.control_dim() {
        return Err(SolverError::InvalidProblem(format!(
            "control has {} components, problem {} expects {}",
            control.dim(),
            problem.name(),
            problem.control_dim()
        )));
    }
    let grid = control.grid().clone();
    let n = problem.state_dim();
    let boundary = problem.boundary();

    let mut start = DVector::zeros(n + 1);
    for k in 0..n {
        start[k] = boundary.x0[k];
        if problem.channel() == UncertaintyChannel::InitialState {
            start[k] += a[k];
        }
    }

    let traj = rk4_integrate(&start, &grid, TrajectoryRole::State, |t, z| {
        let u = control_at(control, t);
        let x = z.as_slice()[..n].to_vec();
        let f = (problem.dynamics())(&x, u.as_slice(), a, t);
        let g = (problem.running_cost())(&x, u.as_slice(), a, t);
        let mut dz = DVector::zeros(n + 1);
        for k in 0..n {
            dz[k] = f[k];
        }
        dz[n] = g;
        Ok(dz)
    })?;

    let z_end = traj.last();
    let x_end = z_end.as_slice()[..n].to_vec();
    Ok(z_end[n] + problem.terminal().eval(&x_end, a, grid.tf()))
}

/// Lists the parameter values to solve as boundary candidates: empty when
/// the stationary parameter already lies inside the uncertainty set (or
/// the set is unbounded), otherwise the box vertices — the two endpoints
/// for a scalar parameter, `2^m` corners in general, rejected beyond
/// `vertex_cap`.
pub fn boundary_candidates(
    problem: &OCProblem,
    a_star: &[f64],
    vertex_cap: usize,
) -> Result<Vec<Vec<f64>>> {
    if a_star.len() != problem.param_dim() {
        return Err(SolverError::InvalidProblem(format!(
            "stationary parameter has {} components, problem {} expects {}",
            a_star.len(),
            problem.name(),
            problem.param_dim()
        )));
    }
    let set = problem.uncertainty();
    if set.contains(a_star, BOX_MEMBERSHIP_TOL) {
        return Ok(Vec::new());
    }
    let Some((lower, upper)) = set.bounds() else {
        return Ok(Vec::new());
    };
    let m = lower.len();
    let count = 1_usize
        .checked_shl(m as u32)
        .filter(|&c| c <= vertex_cap)
        .ok_or_else(|| {
            SolverError::InvalidProblem(format!(
                "box has 2^{m} vertices, exceeding the candidate cap {vertex_cap}"
            ))
        })?;
    let mut vertices = Vec::with_capacity(count);
    for k in 0..count {
        let vertex: Vec<f64> = (0..m)
            .map(|i| {
                if (k >> i) & 1 == 1 {
                    upper[i]
                } else {
                    lower[i]
                }
            })
            .collect();
        vertices.push(vertex);
    }
    Ok(vertices)
}

/// Uniformly spaced scalar grid with exact endpoints.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|k| {
            if k == steps - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

/// Tensor-product grid over a box: `steps` points per component, every
/// combination enumerated with the first component varying fastest.
pub fn tensor_grid(lower: &[f64], upper: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(SolverError::InvalidProblem(
            "grid span needs matching, non-empty bounds".into(),
        ));
    }
    let m = lower.len();
    let total = steps.checked_pow(m as u32).filter(|&t| t <= GRID_POINT_CAP);
    let Some(total) = total else {
        return Err(SolverError::InvalidProblem(format!(
            "grid of {steps} points per dimension over {m} dimensions exceeds {GRID_POINT_CAP} cells"
        )));
    };
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|i| linear_grid(lower[i], upper[i], steps))
        .collect();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let point: Vec<f64> = (0..m)
            .map(|i| {
                let idx = rest % steps;
                rest /= steps;
                axes[i][idx]
            })
            .collect();
        points.push(point);
    }
    Ok(points)
}

/// Replays every candidate across the grid and ranks them by worst-case
/// cost over the in-box grid points. A candidate with any failed cell is
/// disqualified (its cells stay in the matrix as NaN); the winner is the
/// qualified candidate with the smallest worst case, ties broken by lowest
/// index.
pub fn worst_case_scan(
    problem: &OCProblem,
    candidates: &[CandidateControl],
    a_grid: &[Vec<f64>],
) -> Result<ScanResult> {
    if candidates.is_empty() {
        return Err(SolverError::InvalidProblem(
            "worst-case scan needs at least one candidate".into(),
        ));
    }
    if a_grid.is_empty() {
        return Err(SolverError::InvalidProblem(
            "worst-case scan needs a non-empty parameter grid".into(),
        ));
    }
    for candidate in candidates {
        if !candidate.solution.converged {
            return Err(SolverError::InvalidProblem(format!(
                "candidate {} did not converge; it cannot enter the comparison",
                candidate.label
            )));
        }
    }

    let set = problem.uncertainty();
    let in_box: Vec<bool> = a_grid
        .iter()
        .map(|a| set.contains(a, BOX_MEMBERSHIP_TOL))
        .collect();
    if !in_box.iter().any(|&b| b) {
        return Err(SolverError::InvalidProblem(
            "no grid point lies inside the uncertainty set".into(),
        ));
    }

    let mut cost_matrix = Vec::with_capacity(candidates.len());
    let mut worst_case = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let mut row = Vec::with_capacity(a_grid.len());
        let mut worst = f64::NEG_INFINITY;
        let mut disqualified = false;
        for (a, &inside) in a_grid.iter().zip(in_box.iter()) {
            let cost = evaluate_cost_at(problem, &candidate.solution.u, a)
                .ok()
                .filter(|c| c.is_finite());
            match cost {
                Some(c) => {
                    row.push(c);
                    if inside {
                        worst = worst.max(c);
                    }
                }
                None => {
                    row.push(f64::NAN);
                    disqualified = true;
                }
            }
        }
        cost_matrix.push(row);
        worst_case.push(if disqualified { f64::INFINITY } else { worst });
    }

    let winner = worst_case
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, _)| i)
        .unwrap();
    if worst_case[winner].is_infinite() {
        return Err(SolverError::NonConvergence {
            context: "worst-case scan: every candidate had a failed evaluation".into(),
            residual: f64::NAN,
            iterations: 0,
        });
    }
    assert!(
        worst_case.iter().all(|&w| worst_case[winner] <= w),
        "winner must minimize the worst case"
    );

    Ok(ScanResult {
        a_grid: a_grid.to_vec(),
        in_box,
        cost_matrix,
        worst_case,
        winner,
    })
}

/// Probe the two-sided saddle inequality at an optimal-control solution by
/// direct cost replay: control perturbations must not lower the cost, and
/// parameter perturbations must not raise it.
///
/// Both sides are evaluated with [`evaluate_cost_at`] on the solution's own
/// grid, so discretization bias cancels in the differences. The check is
/// always oriented for a min-max point and tests the stationary pair's
/// local saddle property; box feasibility of the parameter is the scan's
/// concern, not the probe's. Only problems with a free terminal state admit
/// arbitrary control perturbations, so other boundary cases are rejected.
pub fn oc_saddle_probe(
    problem: &OCProblem,
    solution: &OcSolution,
    options: &ProbeOptions,
) -> Result<ProbeReport> {
    use crate::problem::BoundaryCase;
    match problem.boundary().case {
        BoundaryCase::FixedTimeFreeState { .. } | BoundaryCase::FreeTimeFreeState => {}
        _ => {
            return Err(SolverError::InvalidProblem(format!(
                "cost probes on {} need a free terminal state; a pinned endpoint makes arbitrary control perturbations inadmissible",
                problem.name()
            )));
        }
    }

    let control = &solution.u;
    let grid = control.grid().clone();
    let n_nodes = grid.n_nodes();
    let span = grid.tf() - grid.t0();
    let m = problem.param_dim();
    let a = &solution.a;
    let tolerance = 1e-9 * (1.0 + solution.cost.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let j_star = evaluate_cost_at(problem, control, a)?;

    let mut trajectory_side_min = f64::INFINITY;
    for k in 0..options.n_probes {
        // Mode number cycles 1, 2, 3, ...; sine and cosine shapes alternate
        // so the probe directions also move the endpoints of the control.
        let mode = (k % 4 + 1) as f64;
        let omega = mode * std::f64::consts::PI / span;
        let use_cos = k % 2 == 1;
        let coef: Vec<f64> = (0..control.dim())
            .map(|_| {
                options.amplitude
                    * rng.gen_range(0.5..1.5)
                    * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            })
            .collect();
        let values: Vec<DVector<f64>> = (0..n_nodes)
            .map(|i| {
                let s = grid.node(i) - grid.t0();
                let bump = if use_cos {
                    (omega * s).cos()
                } else {
                    (omega * s).sin()
                };
                DVector::from_iterator(
                    control.dim(),
                    control
                        .value(i)
                        .iter()
                        .zip(coef.iter())
                        .map(|(u, c)| u + c * bump),
                )
            })
            .collect();
        let perturbed = Trajectory::new(grid.clone(), values, TrajectoryRole::Control)?;
        let j = evaluate_cost_at(problem, &perturbed, a)?;
        trajectory_side_min = trajectory_side_min.min(j - j_star);
    }

    let mut parameter_side_max = f64::NEG_INFINITY;
    if m == 0 {
        parameter_side_max = 0.0;
    } else {
        for _ in 0..options.n_probes {
            let shifted: Vec<f64> = a
                .iter()
                .map(|ak| ak + options.amplitude * rng.gen_range(-1.0..1.0))
                .collect();
            let j = evaluate_cost_at(problem, control, &shifted)?;
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

/// End-to-end bounded-uncertainty run: solve the unconstrained stationary
/// problem, expand boundary candidates if its parameter escapes the box,
/// solve each candidate with the parameter frozen at its vertex (warm
/// started from the interior solution), and scan all candidate controls
/// over the grid. The interior candidate always enters the comparison.
pub fn robust_scan(
    problem: &OCProblem,
    p0_guess: &[f64],
    a_guess: &[f64],
    tf_guess: Option<f64>,
    options: &ScanOptions,
) -> Result<ScanOutcome> {
    if problem.param_dim() == 0 {
        return Err(SolverError::InvalidProblem(format!(
            "problem {} has no uncertain parameter to scan",
            problem.name()
        )));
    }
    let solver_options = OcOptions {
        n_nodes: options.n_nodes,
        ..OcOptions::default()
    };
    let interior = solve_oc(problem, p0_guess, a_guess, tf_guess, &solver_options)?;
    if !interior.converged {
        return Err(SolverError::NonConvergence {
            context: format!("interior stationary solve for {}", problem.name()),
            residual: interior.residual_norm,
            iterations: interior.iterations,
        });
    }

    let interior_in_box = problem
        .uncertainty()
        .contains(&interior.a, BOX_MEMBERSHIP_TOL);
    let vertices = boundary_candidates(problem, &interior.a, options.vertex_cap)?;
    let warm_p0 = interior.p0.clone();
    let warm_tf = problem
        .boundary()
        .case
        .is_free_time()
        .then_some(interior.tf);

    let mut candidates = vec![CandidateControl {
        label: "u".into(),
        frozen_a: None,
        solution: interior,
    }];
    for (k, vertex) in vertices.iter().enumerate() {
        let frozen_options = OcOptions {
            n_nodes: options.n_nodes,
            freeze_a: Some(vertex.clone()),
            ..OcOptions::default()
        };
        let solution = solve_oc(problem, &warm_p0, &[], warm_tf, &frozen_options)?;
        if !solution.converged {
            return Err(SolverError::NonConvergence {
                context: format!(
                    "boundary candidate solve at a = {vertex:?} for {}",
                    problem.name()
                ),
                residual: solution.residual_norm,
                iterations: solution.iterations,
            });
        }
        candidates.push(CandidateControl {
            label: format!("u{}", k + 1),
            frozen_a: Some(vertex.clone()),
            solution,
        });
    }

    let (lower, upper) = match (&options.span, problem.uncertainty().bounds()) {
        (Some((lo, hi)), _) => (lo.clone(), hi.clone()),
        (None, Some((lo, hi))) => (lo.to_vec(), hi.to_vec()),
        (None, None) => {
            return Err(SolverError::InvalidProblem(format!(
                "problem {} has an unbounded uncertainty set; a scan needs an explicit span",
                problem.name()
            )));
        }
    };
    if lower.len() != problem.param_dim() || upper.len() != problem.param_dim() {
        return Err(SolverError::InvalidProblem(
            "scan span dimensions must match the parameter".into(),
        ));
    }
    let grid = tensor_grid(&lower, &upper, options.steps)?;
    let result = worst_case_scan(problem, &candidates, &grid)?;

    Ok(ScanOutcome {
        candidates,
        result,
        interior_in_box,
    })
}
