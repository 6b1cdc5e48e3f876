//! Saddle-point solvers for variational and optimal-control problems whose
//! integrand or dynamics carry a constant uncertain parameter.
//!
//! The crate finds trajectories and parameter values satisfying first-order
//! stationarity in both directions (minimizing over the trajectory or
//! control, maximizing over the parameter), classifies the stationary point
//! from the signs of the second-order quantities, and certifies candidate
//! saddles by direct cost probes and an independent discretized solver.

pub mod classify;
pub mod el;
pub mod error;
pub mod numerics;
pub mod oc;
pub mod oracle;
pub mod problem;
pub mod registry;
pub mod scan;

pub use classify::{classify, ClassificationReport, SaddleClass, SecondOrderSamples};
pub use el::{
    assemble_el_residuals, el_rhs, pointwise_el_residual, saddle_probe, solve_el, ElOptions,
    ElSolution, ElUnknowns, ProbeOptions, ProbeReport,
};
pub use error::{Result, SolverError};
pub use numerics::{
    newton_solve, norm_inf, quadrature, quadrature_weights, rk4_integrate, NewtonConfig,
    NewtonOutcome, TimeGrid, Trajectory, TrajectoryRole,
};
pub use oc::{
    assemble_oc_residuals, hamiltonian, hamiltonian_rhs, solve_oc, solve_oc_initial_uncertainty,
    solve_pointwise_control, OcOptions, OcSolution, OcUnknowns,
};
pub use oracle::{oracle_solve, OracleOptions, OracleOutcome};
pub use problem::{
    transform_initial_uncertainty, BoundaryCase, BoundarySpec, IntegrandDef, OCProblem, ParamMode,
    TerminalCost, TransformedOCProblem, UncertaintyChannel, UncertaintySet, VariationalProblem,
};
pub use registry::{lookup, registry, AnyProblem, Guess, RegistryEntry};
pub use scan::{
    boundary_candidates, evaluate_cost_at, linear_grid, oc_saddle_probe, robust_scan, tensor_grid,
    worst_case_scan, CandidateControl, ScanOptions, ScanOutcome, ScanResult,
};
