//! Problem definitions shared by the solvers: running-cost integrands with
//! analytic or finite-difference partials, terminal costs, boundary cases,
//! and the uncertainty description for the constant parameter.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SolverError};
use crate::numerics::{fd_gradient, fd_step, second_diff, FD_FIRST_REL};

/// Relative step for second differences taken directly on a model callback.
/// Large enough that rounding noise stays far below the classification dead
/// band, and exact for the quadratic-in-each-slot integrands that dominate
/// in practice.
pub const FD_SECOND_REL: f64 = 1e-2;

/// Relative step when differentiating an analytic first derivative once
/// more (the callback is exact, so a small step is safe).
pub const FD_NESTED_REL: f64 = 1e-6;

/// Relative step for four-point mixed differences on a raw callback.
pub const FD_MIXED_REL: f64 = 1e-4;

/// Scalar callback of `(x, xdot, a, t)`.
pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64], &[f64], f64) -> f64 + Send + Sync>;
/// Vector callback of `(x, xdot, a, t)`.
pub type VectorFn = Arc<dyn Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync>;
/// Matrix callback of `(x, xdot, a, t)`, row-major.
pub type MatrixFn = Arc<dyn Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync>;
/// Curve `t -> R^n` (used by surface-constrained endpoints).
pub type CurveFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Which argument slot of an integrand a derivative acts on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Slot {
    X,
    Xdot,
    A,
}

/// Running-cost integrand `g(x, xdot, a, t)` with optional analytic partials.
///
/// Any partial not supplied is computed by central finite differences of
/// `eval` (first derivatives at relative step 1e-6, second derivatives at
/// [`FD_SECOND_REL`]); a supplied first derivative is reused to build the
/// matching second derivative at [`FD_NESTED_REL`]. Supplied partials are
/// cross-checked against finite differences of `eval` when the owning
/// problem is constructed.
#[derive(Clone)]
pub struct IntegrandDef {
    eval: ScalarFn,
    g_x: Option<VectorFn>,
    g_xdot: Option<VectorFn>,
    g_a: Option<VectorFn>,
    g_xx: Option<MatrixFn>,
    g_xdot_xdot: Option<MatrixFn>,
    g_aa: Option<MatrixFn>,
}

impl fmt::Debug for IntegrandDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandDef")
            .field("g_x", &self.g_x.is_some())
            .field("g_xdot", &self.g_xdot.is_some())
            .field("g_a", &self.g_a.is_some())
            .field("g_xx", &self.g_xx.is_some())
            .field("g_xdot_xdot", &self.g_xdot_xdot.is_some())
            .field("g_aa", &self.g_aa.is_some())
            .finish()
    }
}

impl IntegrandDef {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            g_x: None,
            g_xdot: None,
            g_a: None,
            g_xx: None,
            g_xdot_xdot: None,
            g_aa: None,
        }
    }

    pub fn with_g_x<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.g_x = Some(Arc::new(f));
        self
    }

    pub fn with_g_xdot<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.g_xdot = Some(Arc::new(f));
        self
    }

    pub fn with_g_a<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.g_a = Some(Arc::new(f));
        self
    }

    pub fn with_g_xx<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.g_xx = Some(Arc::new(f));
        self
    }

    pub fn with_g_xdot_xdot<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.g_xdot_xdot = Some(Arc::new(f));
        self
    }

    pub fn with_g_aa<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.g_aa = Some(Arc::new(f));
        self
    }

    pub fn eval(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> f64 {
        (self.eval)(x, xdot, a, t)
    }

    fn slot_gradient(&self, slot: Slot, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        let z = match slot {
            Slot::X => x,
            Slot::Xdot => xdot,
            Slot::A => a,
        };
        fd_gradient(
            |v| match slot {
                Slot::X => (self.eval)(v, xdot, a, t),
                Slot::Xdot => (self.eval)(x, v, a, t),
                Slot::A => (self.eval)(x, xdot, v, t),
            },
            z,
            FD_FIRST_REL,
        )
    }

    pub fn g_x(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        match &self.g_x {
            Some(f) => f(x, xdot, a, t),
            None => self.slot_gradient(Slot::X, x, xdot, a, t),
        }
    }

    pub fn g_xdot(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        match &self.g_xdot {
            Some(f) => f(x, xdot, a, t),
            None => self.slot_gradient(Slot::Xdot, x, xdot, a, t),
        }
    }

    pub fn g_a(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        match &self.g_a {
            Some(f) => f(x, xdot, a, t),
            None => self.slot_gradient(Slot::A, x, xdot, a, t),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn slot_hessian(
        &self,
        analytic: &Option<MatrixFn>,
        first: &Option<VectorFn>,
        slot: Slot,
        x: &[f64],
        xdot: &[f64],
        a: &[f64],
        t: f64,
    ) -> DMatrix<f64> {
        let z = match slot {
            Slot::X => x,
            Slot::Xdot => xdot,
            Slot::A => a,
        };
        let dim = z.len();
        if let Some(f) = analytic {
            return DMatrix::from_row_slice(dim, dim, &f(x, xdot, a, t));
        }
        let eval_at = |v: &[f64]| match slot {
            Slot::X => (self.eval)(v, xdot, a, t),
            Slot::Xdot => (self.eval)(x, v, a, t),
            Slot::A => (self.eval)(x, xdot, v, t),
        };
        if let Some(f) = first {
            // Differentiate the analytic gradient once: column j holds
            // ∂(grad)/∂z_j.
            let grad_at = |v: &[f64]| match slot {
                Slot::X => f(v, xdot, a, t),
                Slot::Xdot => f(x, v, a, t),
                Slot::A => f(x, xdot, v, t),
            };
            let mut m = DMatrix::zeros(dim, dim);
            let mut work = z.to_vec();
            for j in 0..dim {
                let h = fd_step(z[j], FD_NESTED_REL);
                work[j] = z[j] + h;
                let gp = grad_at(&work);
                work[j] = z[j] - h;
                let gm = grad_at(&work);
                work[j] = z[j];
                for i in 0..dim {
                    m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            return m;
        }
        fd_hessian(eval_at, z, FD_SECOND_REL)
    }

    pub fn g_xx(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> DMatrix<f64> {
        self.slot_hessian(&self.g_xx, &self.g_x, Slot::X, x, xdot, a, t)
    }

    pub fn g_xdot_xdot(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> DMatrix<f64> {
        self.slot_hessian(&self.g_xdot_xdot, &self.g_xdot, Slot::Xdot, x, xdot, a, t)
    }

    pub fn g_aa(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> DMatrix<f64> {
        self.slot_hessian(&self.g_aa, &self.g_a, Slot::A, x, xdot, a, t)
    }

    /// Mixed second derivative ∂²g/∂ẋ_i ∂x_j.
    pub fn g_xdot_x(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> DMatrix<f64> {
        let n = x.len();
        if let Some(f) = &self.g_xdot {
            let mut m = DMatrix::zeros(n, n);
            let mut xw = x.to_vec();
            for j in 0..n {
                let h = fd_step(x[j], FD_NESTED_REL);
                xw[j] = x[j] + h;
                let gp = f(&xw, xdot, a, t);
                xw[j] = x[j] - h;
                let gm = f(&xw, xdot, a, t);
                xw[j] = x[j];
                for i in 0..n {
                    m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            return m;
        }
        let mut m = DMatrix::zeros(n, n);
        let mut xw = x.to_vec();
        let mut vw = xdot.to_vec();
        for i in 0..n {
            let hv = fd_step(xdot[i], FD_MIXED_REL);
            for j in 0..n {
                let hx = fd_step(x[j], FD_MIXED_REL);
                let mut sample = |sv: f64, sx: f64| {
                    vw[i] = xdot[i] + sv * hv;
                    xw[j] = x[j] + sx * hx;
                    let g = (self.eval)(&xw, &vw, a, t);
                    vw[i] = xdot[i];
                    xw[j] = x[j];
                    g
                };
                m[(i, j)] = (sample(1.0, 1.0) - sample(1.0, -1.0) - sample(-1.0, 1.0)
                    + sample(-1.0, -1.0))
                    / (4.0 * hv * hx);
            }
        }
        m
    }

    /// Mixed second derivative ∂²g/∂ẋ_i ∂t.
    pub fn g_xdot_t(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        if let Some(f) = &self.g_xdot {
            let h = fd_step(t, FD_NESTED_REL);
            let gp = f(x, xdot, a, t + h);
            let gm = f(x, xdot, a, t - h);
            return gp
                .iter()
                .zip(gm.iter())
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
        }
        let n = x.len();
        let ht = fd_step(t, FD_MIXED_REL);
        let mut vw = xdot.to_vec();
        (0..n)
            .map(|i| {
                let hv = fd_step(xdot[i], FD_MIXED_REL);
                let mut sample = |sv: f64, st: f64| {
                    vw[i] = xdot[i] + sv * hv;
                    let g = (self.eval)(x, &vw, a, t + st * ht);
                    vw[i] = xdot[i];
                    g
                };
                (sample(1.0, 1.0) - sample(1.0, -1.0) - sample(-1.0, 1.0) + sample(-1.0, -1.0))
                    / (4.0 * hv * ht)
            })
            .collect()
    }

    /// Same integrand multiplied by a constant factor (analytic partials are
    /// scaled too, so the result is as cheap and exact as the original).
    pub fn scaled(&self, factor: f64) -> Self {
        fn scale_vec(f: &Option<VectorFn>, factor: f64) -> Option<VectorFn> {
            f.as_ref().map(|f| {
                let f = Arc::clone(f);
                Arc::new(move |x: &[f64], v: &[f64], a: &[f64], t: f64| {
                    f(x, v, a, t).into_iter().map(|c| factor * c).collect()
                }) as VectorFn
            })
        }
        let eval = Arc::clone(&self.eval);
        Self {
            eval: Arc::new(move |x, v, a, t| factor * eval(x, v, a, t)),
            g_x: scale_vec(&self.g_x, factor),
            g_xdot: scale_vec(&self.g_xdot, factor),
            g_a: scale_vec(&self.g_a, factor),
            g_xx: scale_vec(&self.g_xx, factor),
            g_xdot_xdot: scale_vec(&self.g_xdot_xdot, factor),
            g_aa: scale_vec(&self.g_aa, factor),
        }
    }

    /// Cross-check every supplied analytic partial against finite
    /// differences of `eval` at the given point.
    fn check_consistency(&self, x: &[f64], xdot: &[f64], a: &[f64], t: f64) -> Result<()> {
        let tol = |v: f64| 1e-4 * (1.0 + v.abs());
        let report = |name: &str, got: f64, want: f64| -> Result<()> {
            if (got - want).abs() > tol(want) {
                return Err(SolverError::InvalidProblem(format!(
                    "analytic {name} disagrees with finite differences of the integrand \
                     (analytic {got:.6e}, finite-difference {want:.6e})"
                )));
            }
            Ok(())
        };
        for (slot, name, analytic) in [
            (Slot::X, "g_x", &self.g_x),
            (Slot::Xdot, "g_xdot", &self.g_xdot),
            (Slot::A, "g_a", &self.g_a),
        ] {
            if let Some(f) = analytic {
                let got = f(x, xdot, a, t);
                let want = self.slot_gradient(slot, x, xdot, a, t);
                if got.len() != want.len() {
                    return Err(SolverError::InvalidProblem(format!(
                        "analytic {name} returns {} components, expected {}",
                        got.len(),
                        want.len()
                    )));
                }
                for (g, w) in got.iter().zip(want.iter()) {
                    report(name, *g, *w)?;
                }
            }
        }
        for (slot, name, analytic) in [
            (Slot::X, "g_xx", &self.g_xx),
            (Slot::Xdot, "g_xdot_xdot", &self.g_xdot_xdot),
            (Slot::A, "g_aa", &self.g_aa),
        ] {
            if let Some(f) = analytic {
                let z = match slot {
                    Slot::X => x,
                    Slot::Xdot => xdot,
                    Slot::A => a,
                };
                let got = f(x, xdot, a, t);
                if got.len() != z.len() * z.len() {
                    return Err(SolverError::InvalidProblem(format!(
                        "analytic {name} returns {} entries, expected {}",
                        got.len(),
                        z.len() * z.len()
                    )));
                }
                let eval_at = |v: &[f64]| match slot {
                    Slot::X => (self.eval)(v, xdot, a, t),
                    Slot::Xdot => (self.eval)(x, v, a, t),
                    Slot::A => (self.eval)(x, xdot, v, t),
                };
                let want = fd_hessian(eval_at, z, FD_SECOND_REL);
                for i in 0..z.len() {
                    for j in 0..z.len() {
                        report(name, got[i * z.len() + j], want[(i, j)])?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Central-difference Hessian of a scalar function of one slice.
pub(crate) fn fd_hessian<F: Fn(&[f64]) -> f64>(f: F, z: &[f64], rel: f64) -> DMatrix<f64> {
    let n = z.len();
    let mut m = DMatrix::zeros(n, n);
    let mut w = z.to_vec();
    for i in 0..n {
        let hi = fd_step(z[i], rel);
        m[(i, i)] = second_diff(
            |zi| {
                w[i] = zi;
                let v = f(&w);
                w[i] = z[i];
                v
            },
            z[i],
            hi,
        );
        for j in 0..i {
            let hj = fd_step(z[j], rel);
            let mut sample = |si: f64, sj: f64| {
                w[i] = z[i] + si * hi;
                w[j] = z[j] + sj * hj;
                let v = f(&w);
                w[i] = z[i];
                w[j] = z[j];
                v
            };
            let mixed = (sample(1.0, 1.0) - sample(1.0, -1.0) - sample(-1.0, 1.0)
                + sample(-1.0, -1.0))
                / (4.0 * hi * hj);
            m[(i, j)] = mixed;
            m[(j, i)] = mixed;
        }
    }
    m
}

/// Endpoint structure of the horizon: which of `tf` and `x(tf)` are fixed,
/// free, or tied to a moving target curve.
#[derive(Clone)]
pub enum BoundaryCase {
    /// Both the final time and the final state are prescribed.
    FixedTimeFixedState { tf: f64, xf: Vec<f64> },
    /// The final time is prescribed, the final state is free.
    FixedTimeFreeState { tf: f64 },
    /// The final state is prescribed, the final time is free.
    FreeTimeFixedState { xf: Vec<f64> },
    /// Both the final time and the final state are free.
    FreeTimeFreeState,
    /// The endpoint must land on a moving target `x(tf) = theta(tf)`.
    SurfaceConstrained { theta: CurveFn, theta_dot: CurveFn },
}

impl fmt::Debug for BoundaryCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl BoundaryCase {
    pub fn label(&self) -> &'static str {
        match self {
            Self::FixedTimeFixedState { .. } => "fixed-time-fixed-state",
            Self::FixedTimeFreeState { .. } => "fixed-time-free-state",
            Self::FreeTimeFixedState { .. } => "free-time-fixed-state",
            Self::FreeTimeFreeState => "free-time-free-state",
            Self::SurfaceConstrained { .. } => "surface-constrained",
        }
    }

    pub fn is_free_time(&self) -> bool {
        matches!(
            self,
            Self::FreeTimeFixedState { .. }
                | Self::FreeTimeFreeState
                | Self::SurfaceConstrained { .. }
        )
    }

    /// The prescribed final time, when there is one.
    pub fn fixed_tf(&self) -> Option<f64> {
        match self {
            Self::FixedTimeFixedState { tf, .. } | Self::FixedTimeFreeState { tf } => Some(*tf),
            _ => None,
        }
    }

    /// The prescribed final state, when there is one.
    pub fn fixed_xf(&self) -> Option<&[f64]> {
        match self {
            Self::FixedTimeFixedState { xf, .. } | Self::FreeTimeFixedState { xf } => {
                Some(xf.as_slice())
            }
            _ => None,
        }
    }
}

/// Initial point plus the endpoint case.
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub case: BoundaryCase,
}

impl BoundarySpec {
    pub fn new(t0: f64, x0: Vec<f64>, case: BoundaryCase) -> Self {
        Self { t0, x0, case }
    }

    fn validate(&self, state_dim: usize) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(SolverError::InvalidProblem("t0 is not finite".into()));
        }
        if self.x0.len() != state_dim {
            return Err(SolverError::InvalidProblem(format!(
                "x0 has {} components for a {}-dimensional state",
                self.x0.len(),
                state_dim
            )));
        }
        match &self.case {
            BoundaryCase::FixedTimeFixedState { tf, xf } => {
                if *tf <= self.t0 {
                    return Err(SolverError::InvalidProblem(format!(
                        "fixed final time {tf} must exceed t0 = {}",
                        self.t0
                    )));
                }
                if xf.len() != state_dim {
                    return Err(SolverError::InvalidProblem(format!(
                        "xf has {} components for a {}-dimensional state",
                        xf.len(),
                        state_dim
                    )));
                }
            }
            BoundaryCase::FixedTimeFreeState { tf } => {
                if *tf <= self.t0 {
                    return Err(SolverError::InvalidProblem(format!(
                        "fixed final time {tf} must exceed t0 = {}",
                        self.t0
                    )));
                }
            }
            BoundaryCase::FreeTimeFixedState { xf } => {
                if xf.len() != state_dim {
                    return Err(SolverError::InvalidProblem(format!(
                        "xf has {} components for a {}-dimensional state",
                        xf.len(),
                        state_dim
                    )));
                }
            }
            BoundaryCase::FreeTimeFreeState => {}
            BoundaryCase::SurfaceConstrained { theta, .. } => {
                let probe = theta(self.t0 + 1.0);
                if probe.len() != state_dim {
                    return Err(SolverError::InvalidProblem(format!(
                        "target curve returns {} components for a {}-dimensional state",
                        probe.len(),
                        state_dim
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Whether the parameter is a solver unknown or pinned to a given value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamMode {
    /// The parameter is solved for (stationarity equations included).
    Free(Vec<f64>),
    /// The parameter is held at this value; the solver only optimizes the
    /// trajectory side.
    Frozen(Vec<f64>),
}

impl ParamMode {
    pub fn value(&self) -> &[f64] {
        match self {
            Self::Free(a) | Self::Frozen(a) => a,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Self::Free(_))
    }

    /// Number of parameter unknowns the solver sees.
    pub fn free_dim(&self) -> usize {
        match self {
            Self::Free(a) => a.len(),
            Self::Frozen(_) => 0,
        }
    }

    pub fn with_value(&self, a: Vec<f64>) -> Self {
        match self {
            Self::Free(_) => Self::Free(a),
            Self::Frozen(_) => Self::Frozen(a),
        }
    }
}

/// Admissible set for the constant parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    /// The parameter ranges over all of R^dim.
    Unbounded { dim: usize },
    /// Componentwise box `lower[k] <= a[k] <= upper[k]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl UncertaintySet {
    pub fn dim(&self) -> usize {
        match self {
            Self::Unbounded { dim } => *dim,
            Self::Box { lower, .. } => lower.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Box { lower, upper } = self {
            if lower.len() != upper.len() {
                return Err(SolverError::InvalidProblem(format!(
                    "box bounds have mismatched lengths {} and {}",
                    lower.len(),
                    upper.len()
                )));
            }
            for (k, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(SolverError::InvalidProblem(format!(
                        "box component {k} needs finite lower < upper, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, a: &[f64], tol: f64) -> bool {
        match self {
            Self::Unbounded { dim } => a.len() == *dim,
            Self::Box { lower, upper } => {
                a.len() == lower.len()
                    && a.iter()
                        .zip(lower.iter().zip(upper.iter()))
                        .all(|(&ak, (&lo, &hi))| ak >= lo - tol && ak <= hi + tol)
            }
        }
    }

    /// Box bounds when the set is a box.
    pub fn bounds(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Self::Unbounded { .. } => None,
            Self::Box { lower, upper } => Some((lower, upper)),
        }
    }
}

/// A sampled (x, xdot, a, t) evaluation point.
type ProbePoint = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

/// Fixed, deterministic probe points for validating analytic partials.
fn consistency_probes(state_dim: usize, param_dim: usize, t0: f64, t_hint: f64) -> Vec<ProbePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    (0..8)
        .map(|_| {
            let x: Vec<f64> = (0..state_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..state_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a: Vec<f64> = (0..param_dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let t = t0 + rng.gen_range(0.0..1.0) * (t_hint - t0).abs().max(0.5);
            (x, v, a, t)
        })
        .collect()
}

/// A variational problem: minimize (over trajectories) and maximize (over
/// the constant parameter) the integral of `integrand` subject to the
/// boundary description.
#[derive(Debug, Clone)]
pub struct VariationalProblem {
    name: String,
    state_dim: usize,
    param_dim: usize,
    integrand: IntegrandDef,
    boundary: BoundarySpec,
    uncertainty: UncertaintySet,
}

impl VariationalProblem {
    pub fn new(
        name: impl Into<String>,
        state_dim: usize,
        integrand: IntegrandDef,
        boundary: BoundarySpec,
        uncertainty: UncertaintySet,
    ) -> Result<Self> {
        if state_dim == 0 {
            return Err(SolverError::InvalidProblem(
                "state dimension must be positive".into(),
            ));
        }
        boundary.validate(state_dim)?;
        uncertainty.validate()?;
        let param_dim = uncertainty.dim();
        let t_hint = boundary.case.fixed_tf().unwrap_or(boundary.t0 + 1.0);
        for (x, v, a, t) in consistency_probes(state_dim, param_dim, boundary.t0, t_hint) {
            integrand.check_consistency(&x, &v, &a, t)?;
        }
        Ok(Self {
            name: name.into(),
            state_dim,
            param_dim,
            integrand,
            boundary,
            uncertainty,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn integrand(&self) -> &IntegrandDef {
        &self.integrand
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn uncertainty(&self) -> &UncertaintySet {
        &self.uncertainty
    }

    /// The same problem with the integrand multiplied by a constant.
    pub fn scaled(&self, factor: f64, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            integrand: self.integrand.scaled(factor),
            ..self.clone()
        }
    }
}

/// Dynamics callback `f(x, u, a, t)`.
pub type DynamicsFn = Arc<dyn Fn(&[f64], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync>;
/// Running cost callback `g(x, u, a, t)`.
pub type RunningCostFn = Arc<dyn Fn(&[f64], &[f64], &[f64], f64) -> f64 + Send + Sync>;

type TermEvalFn = Arc<dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync>;
type TermVecFn = Arc<dyn Fn(&[f64], &[f64], f64) -> Vec<f64> + Send + Sync>;
type TermScalarFn = Arc<dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync>;

/// Terminal cost `h`. Public constructors take functions of `(x, t)`; the
/// parameter argument appears only when a coordinate shift has folded the
/// parameter into the terminal cost.
#[derive(Clone)]
pub struct TerminalCost {
    eval: TermEvalFn,
    x_grad: Option<TermVecFn>,
    t_partial: Option<TermScalarFn>,
    a_grad: Option<TermVecFn>,
}

impl fmt::Debug for TerminalCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TerminalCost")
            .field("x_grad", &self.x_grad.is_some())
            .field("t_partial", &self.t_partial.is_some())
            .field("a_grad", &self.a_grad.is_some())
            .finish()
    }
}

impl TerminalCost {
    /// No terminal cost.
    pub fn zero() -> Self {
        Self {
            eval: Arc::new(|_, _, _| 0.0),
            x_grad: Some(Arc::new(|x, _, _| vec![0.0; x.len()])),
            t_partial: Some(Arc::new(|_, _, _| 0.0)),
            a_grad: Some(Arc::new(|_, a, _| vec![0.0; a.len()])),
        }
    }

    /// Terminal cost `h(x, t)` with finite-difference partials.
    pub fn of_state_time<F>(eval: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(move |x, _a, t| eval(x, t)),
            x_grad: None,
            t_partial: None,
            a_grad: Some(Arc::new(|_, a, _| vec![0.0; a.len()])),
        }
    }

    /// Supply an analytic state gradient `h_x(x, t)`.
    pub fn with_x_grad<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.x_grad = Some(Arc::new(move |x, _a, t| f(x, t)));
        self
    }

    /// Supply an analytic time partial `h_t(x, t)`.
    pub fn with_t_partial<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        self.t_partial = Some(Arc::new(move |x, _a, t| f(x, t)));
        self
    }

    /// Fully parameter-aware terminal cost, used when a coordinate shift
    /// rewrites `h(x, t)` as `h(y + a, t)`.
    pub(crate) fn from_param_aware(
        eval: TermEvalFn,
        x_grad: Option<TermVecFn>,
        t_partial: Option<TermScalarFn>,
        a_grad: Option<TermVecFn>,
    ) -> Self {
        Self {
            eval,
            x_grad,
            t_partial,
            a_grad,
        }
    }

    pub fn eval(&self, x: &[f64], a: &[f64], t: f64) -> f64 {
        (self.eval)(x, a, t)
    }

    pub fn h_x(&self, x: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        match &self.x_grad {
            Some(f) => f(x, a, t),
            None => fd_gradient(|v| (self.eval)(v, a, t), x, FD_FIRST_REL),
        }
    }

    pub fn h_t(&self, x: &[f64], a: &[f64], t: f64) -> f64 {
        match &self.t_partial {
            Some(f) => f(x, a, t),
            None => {
                let h = fd_step(t, FD_FIRST_REL);
                ((self.eval)(x, a, t + h) - (self.eval)(x, a, t - h)) / (2.0 * h)
            }
        }
    }

    pub fn h_a(&self, x: &[f64], a: &[f64], t: f64) -> Vec<f64> {
        match &self.a_grad {
            Some(f) => f(x, a, t),
            None => fd_gradient(|v| (self.eval)(x, v, t), a, FD_FIRST_REL),
        }
    }

    /// Second derivative of `h` in the parameter, used by the second-order
    /// test when the parameter enters through the initial state.
    pub fn h_aa(&self, x: &[f64], a: &[f64], t: f64) -> DMatrix<f64> {
        if let Some(f) = &self.a_grad {
            let m = a.len();
            let mut out = DMatrix::zeros(m, m);
            let mut w = a.to_vec();
            for j in 0..m {
                let h = fd_step(a[j], FD_NESTED_REL);
                w[j] = a[j] + h;
                let gp = f(x, &w, t);
                w[j] = a[j] - h;
                let gm = f(x, &w, t);
                w[j] = a[j];
                for i in 0..m {
                    out[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            out
        } else {
            fd_hessian(|v| (self.eval)(x, v, t), a, FD_SECOND_REL)
        }
    }
}

/// How the constant parameter enters an optimal-control problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyChannel {
    /// The parameter appears in the dynamics and/or costs directly.
    Dynamics,
    /// The parameter shifts the initial state: `x(t0) = x0 + a`. Such
    /// problems are solved through a coordinate change that moves the shift
    /// into the costs.
    InitialState,
}

/// An optimal-control problem: minimize (over the control) and maximize
/// (over the constant parameter) a Bolza cost subject to `dx/dt = f`.
#[derive(Clone)]
pub struct OCProblem {
    name: String,
    state_dim: usize,
    control_dim: usize,
    param_dim: usize,
    dynamics: DynamicsFn,
    running_cost: RunningCostFn,
    terminal: TerminalCost,
    boundary: BoundarySpec,
    uncertainty: UncertaintySet,
    channel: UncertaintyChannel,
}

impl fmt::Debug for OCProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OCProblem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("control_dim", &self.control_dim)
            .field("param_dim", &self.param_dim)
            .field("boundary", &self.boundary)
            .field("uncertainty", &self.uncertainty)
            .field("channel", &self.channel)
            .finish()
    }
}

impl OCProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        state_dim: usize,
        control_dim: usize,
        dynamics: DynamicsFn,
        running_cost: RunningCostFn,
        terminal: TerminalCost,
        boundary: BoundarySpec,
        uncertainty: UncertaintySet,
        channel: UncertaintyChannel,
    ) -> Result<Self> {
        if state_dim == 0 || control_dim == 0 {
            return Err(SolverError::InvalidProblem(
                "state and control dimensions must be positive".into(),
            ));
        }
        boundary.validate(state_dim)?;
        uncertainty.validate()?;
        let param_dim = uncertainty.dim();
        let probe = dynamics(
            &boundary.x0,
            &vec![0.0; control_dim],
            &vec![0.0; param_dim],
            boundary.t0,
        );
        if probe.len() != state_dim {
            return Err(SolverError::InvalidProblem(format!(
                "dynamics returns {} components for a {}-dimensional state",
                probe.len(),
                state_dim
            )));
        }
        Ok(Self {
            name: name.into(),
            state_dim,
            control_dim,
            param_dim,
            dynamics,
            running_cost,
            terminal,
            boundary,
            uncertainty,
            channel,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn dynamics(&self) -> &DynamicsFn {
        &self.dynamics
    }

    pub fn running_cost(&self) -> &RunningCostFn {
        &self.running_cost
    }

    pub fn terminal(&self) -> &TerminalCost {
        &self.terminal
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn uncertainty(&self) -> &UncertaintySet {
        &self.uncertainty
    }

    pub fn channel(&self) -> UncertaintyChannel {
        self.channel
    }

    /// Same problem with a replaced uncertainty set (used to add or drop
    /// box bounds without retyping the model).
    pub fn with_uncertainty(
        &self,
        uncertainty: UncertaintySet,
        name: impl Into<String>,
    ) -> Result<Self> {
        uncertainty.validate()?;
        if uncertainty.dim() != self.param_dim {
            return Err(SolverError::InvalidProblem(format!(
                "replacement uncertainty set has dimension {}, expected {}",
                uncertainty.dim(),
                self.param_dim
            )));
        }
        Ok(Self {
            name: name.into(),
            uncertainty,
            ..self.clone()
        })
    }
}

/// An optimal-control problem rewritten in shifted coordinates `y = x − a`,
/// produced by [`transform_initial_uncertainty`]. The shifted problem starts
/// from the known nominal state exactly, and the parameter dependence the
/// shift introduces into the terminal cost carries the extra stationarity
/// and curvature terms of the initial-state-uncertainty conditions.
#[derive(Debug, Clone)]
pub struct TransformedOCProblem {
    shifted: OCProblem,
}

impl TransformedOCProblem {
    /// The problem in `y`-coordinates (uncertainty rerouted to the
    /// dynamics/cost channel; boundary start is the nominal state).
    pub fn shifted(&self) -> &OCProblem {
        &self.shifted
    }

    /// Map a shifted-coordinate state back to original coordinates:
    /// `x = y + a`.
    pub fn back_map(&self, y: &[f64], a: &[f64]) -> Vec<f64> {
        y.iter().zip(a.iter()).map(|(y, a)| y + a).collect()
    }
}

/// Rewrite a problem whose uncertain parameter enters as an additive offset
/// on the initial state, `x(t0) = x0 + a`, into shifted coordinates
/// `y = x − a` with `y(t0) = x0` exactly.
///
/// Requirements: the problem must declare the initial-state channel, the
/// parameter must have the state's dimension (componentwise shift), the
/// dynamics must not already depend on the parameter (mixing both channels
/// in one shift is not supported), and the terminal state must be free with
/// the final time fixed — a pinned or surface-constrained endpoint would
/// constrain `y(tf) = x(tf) − a` in an `a`-dependent way that this
/// construction does not model.
pub fn transform_initial_uncertainty(problem: &OCProblem) -> Result<TransformedOCProblem> {
    if problem.channel() != UncertaintyChannel::InitialState {
        return Err(SolverError::InvalidProblem(format!(
            "problem {:?} does not declare initial-state uncertainty",
            problem.name()
        )));
    }
    let n = problem.state_dim();
    let m = problem.param_dim();
    if m != n {
        return Err(SolverError::InvalidProblem(format!(
            "an additive initial-state shift needs one parameter per state \
             component (state dimension {n}, parameter dimension {m})"
        )));
    }
    if !matches!(
        problem.boundary().case,
        BoundaryCase::FixedTimeFreeState { .. }
    ) {
        return Err(SolverError::InvalidProblem(
            "the initial-state shift supports a fixed final time with free \
             final state; other endpoint cases would constrain the shifted \
             state through the unknown parameter"
                .into(),
        ));
    }
    // The dynamics must not consume the parameter directly; probe a few
    // pseudo-random points with two different parameter values.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let f = problem.dynamics();
    let r = problem.control_dim();
    let t0 = problem.boundary().t0;
    for _ in 0..8 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u: Vec<f64> = (0..r).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = t0 + rng.gen_range(0.0..1.0);
        let a1: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a2: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f1 = f(&x, &u, &a1, t);
        let f2 = f(&x, &u, &a2, t);
        for (v1, v2) in f1.iter().zip(f2.iter()) {
            if (v1 - v2).abs() > 1e-10 * (1.0 + v1.abs()) {
                return Err(SolverError::InvalidProblem(
                    "the dynamics already depend on the parameter; the \
                     initial-state shift cannot also absorb a dynamics-channel \
                     dependence"
                        .into(),
                ));
            }
        }
    }

    let shift =
        |y: &[f64], a: &[f64]| -> Vec<f64> { y.iter().zip(a.iter()).map(|(y, a)| y + a).collect() };

    let f0 = Arc::clone(problem.dynamics());
    let dynamics: DynamicsFn =
        Arc::new(move |y: &[f64], u: &[f64], a: &[f64], t: f64| f0(&shift(y, a), u, a, t));
    let g0 = Arc::clone(problem.running_cost());
    let running: RunningCostFn =
        Arc::new(move |y: &[f64], u: &[f64], a: &[f64], t: f64| g0(&shift(y, a), u, a, t));

    // Terminal cost in shifted coordinates: h1(y, a, t) = h(y + a, t).
    // Its state and parameter gradients are both chain rules through the
    // shift, so they reuse the original accessors (analytic when supplied,
    // finite differences otherwise); the parameter gradient additionally
    // keeps any direct parameter dependence the original cost had.
    let h_eval = problem.terminal().clone();
    let h_xg = problem.terminal().clone();
    let h_tp = problem.terminal().clone();
    let h_ag = problem.terminal().clone();
    let terminal = TerminalCost::from_param_aware(
        Arc::new(move |y: &[f64], a: &[f64], t: f64| h_eval.eval(&shift(y, a), a, t)),
        Some(Arc::new(move |y: &[f64], a: &[f64], t: f64| {
            h_xg.h_x(&shift(y, a), a, t)
        })),
        Some(Arc::new(move |y: &[f64], a: &[f64], t: f64| {
            h_tp.h_t(&shift(y, a), a, t)
        })),
        Some(Arc::new(move |y: &[f64], a: &[f64], t: f64| {
            let xs = shift(y, a);
            let grad_through_shift = h_ag.h_x(&xs, a, t);
            let direct = h_ag.h_a(&xs, a, t);
            grad_through_shift
                .into_iter()
                .zip(direct)
                .map(|(s, d)| s + d)
                .collect()
        })),
    );

    let boundary = problem.boundary().clone();
    let shifted = OCProblem::new(
        format!("{}#shifted", problem.name()),
        n,
        r,
        dynamics,
        running,
        terminal,
        boundary,
        problem.uncertainty().clone(),
        UncertaintyChannel::Dynamics,
    )?;
    Ok(TransformedOCProblem { shifted })
}
