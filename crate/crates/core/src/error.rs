use thiserror::Error;

/// Errors produced by problem construction, numerical kernels, and solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A problem definition or request is malformed: bad dimensions, an
    /// unknown registry name, an invalid grid, or an unsupported combination
    /// of boundary case and solver.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The state became non-finite while integrating; `node` is the grid
    /// index at which the blow-up was detected.
    #[error("integration diverged at node {node}: state is no longer finite")]
    IntegrationDiverged { node: usize },

    /// The Newton linear system is singular or too ill-conditioned to trust.
    #[error("singular Jacobian in Newton step (condition estimate {cond:.3e})")]
    SingularJacobian { cond: f64 },

    /// A subproblem that must converge exactly (e.g. the pointwise control
    /// solve inside the costate sweep) exhausted its iteration budget.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, SolverError>;
