//! Classification of a stationary pair from the signs of the second-order
//! quantities: the integrated second parameter derivative and the pointwise
//! curvatures of the integrand in the state and state-derivative slots.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::numerics::{quadrature, TimeGrid};

/// Values within this band of zero are treated as exactly zero when reading
/// signs, so curvature that vanishes identically (a linear slot) is not
/// misread from rounding noise.
pub const SIGN_DEAD_BAND: f64 = 1e-9;

/// The saddle orientation of a stationary pair: which player the trajectory
/// side and the parameter side each favor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleClass {
    /// Trajectory minimizes, parameter maximizes: a certified worst-case
    /// design point.
    MinMax,
    /// Both directions are maxima.
    MaxMax,
    /// Trajectory maximizes, parameter minimizes.
    MaxMin,
    /// Both directions are minima.
    MinMin,
    /// The signs fit none of the four patterns.
    Indeterminate,
}

impl SaddleClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::MinMax => "min-max",
            Self::MaxMax => "max-max",
            Self::MaxMin => "max-min",
            Self::MinMin => "min-min",
            Self::Indeterminate => "indeterminate",
        }
    }
}

/// Per-node second-order samples collected along a solved trajectory. The
/// state and state-derivative blocks are sampled pointwise; the parameter
/// block is integrated over the horizon, plus an optional boundary term
/// contributed when the parameter enters through the initial state.
#[derive(Debug, Clone)]
pub struct SecondOrderSamples {
    pub grid: TimeGrid,
    /// Curvature in the state slot at each node (n×n each).
    pub in_x: Vec<DMatrix<f64>>,
    /// Curvature in the state-derivative slot at each node (n×n each).
    pub in_xdot: Vec<DMatrix<f64>>,
    /// Curvature in the parameter slot at each node (m×m each).
    pub in_a: Vec<DMatrix<f64>>,
    /// Boundary contribution added to the integrated parameter block.
    pub boundary_in_a: Option<DMatrix<f64>>,
}

/// Outcome of the sign analysis.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub class: SaddleClass,
    /// Integrated parameter curvature (m×m), including any boundary term.
    pub i_aa: DMatrix<f64>,
    /// Extremal eigenvalues of the pointwise state curvature over all nodes.
    pub x_curvature: (f64, f64),
    /// Extremal eigenvalues of the pointwise state-derivative curvature.
    pub xdot_curvature: (f64, f64),
    /// Extremal eigenvalues of `i_aa` (0-dim problems report (0, 0)).
    pub a_curvature: (f64, f64),
    /// The state slot is (numerically) linear, which stands in for strict
    /// convexity in the min-max pattern.
    pub linear_in_x: bool,
    /// Same for the state-derivative slot.
    pub linear_in_xdot: bool,
}

fn eig_range(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if m.nrows() == 0 {
        return Ok((0.0, 0.0));
    }
    let sym = m.symmetric_part();
    let eigs = sym.symmetric_eigen().eigenvalues;
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(SolverError::InvalidProblem(
            "second-order samples contain non-finite values".into(),
        ));
    }
    Ok((lo, hi))
}

/// Fold per-node eigenvalue ranges into one (min over nodes, max over nodes).
fn pointwise_range(mats: &[DMatrix<f64>]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in mats {
        let (l, h) = eig_range(m)?;
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok((lo, hi))
}

/// Classify a stationary pair from second-order samples.
///
/// Sign tests use [`SIGN_DEAD_BAND`]; the four patterns are tried in the
/// order min-max, max-max, max-min, min-min, and slots whose curvature
/// vanishes identically (linear slots) satisfy the convexity half of the
/// min-max pattern only. With no parameter (m = 0) the parameter-side tests
/// hold vacuously.
pub fn classify(samples: &SecondOrderSamples) -> Result<ClassificationReport> {
    let n_nodes = samples.grid.n_nodes();
    if samples.in_x.len() != n_nodes || samples.in_xdot.len() != n_nodes {
        return Err(SolverError::InvalidProblem(format!(
            "second-order samples cover {} / {} nodes of a {}-node grid",
            samples.in_x.len(),
            samples.in_xdot.len(),
            n_nodes
        )));
    }
    let m = samples.in_a.first().map_or(0, |b| b.nrows());
    let mut i_aa = DMatrix::zeros(m, m);
    if m > 0 {
        if samples.in_a.len() != n_nodes {
            return Err(SolverError::InvalidProblem(format!(
                "parameter curvature sampled at {} of {} nodes",
                samples.in_a.len(),
                n_nodes
            )));
        }
        for i in 0..m {
            for j in 0..m {
                let entries: Vec<f64> = samples.in_a.iter().map(|b| b[(i, j)]).collect();
                i_aa[(i, j)] = quadrature(&entries, &samples.grid)?;
            }
        }
    }
    if let Some(extra) = &samples.boundary_in_a {
        if extra.nrows() != m || extra.ncols() != m {
            return Err(SolverError::InvalidProblem(
                "boundary parameter-curvature term has the wrong shape".into(),
            ));
        }
        i_aa += extra;
    }

    let x_curvature = pointwise_range(&samples.in_x)?;
    let xdot_curvature = pointwise_range(&samples.in_xdot)?;
    let a_curvature = eig_range(&i_aa)?;

    let pos_x = x_curvature.0 > SIGN_DEAD_BAND;
    let neg_x = x_curvature.1 < -SIGN_DEAD_BAND;
    let linear_in_x = x_curvature.0.abs() < SIGN_DEAD_BAND && x_curvature.1.abs() < SIGN_DEAD_BAND;
    let pos_v = xdot_curvature.0 > SIGN_DEAD_BAND;
    let neg_v = xdot_curvature.1 < -SIGN_DEAD_BAND;
    let linear_in_xdot =
        xdot_curvature.0.abs() < SIGN_DEAD_BAND && xdot_curvature.1.abs() < SIGN_DEAD_BAND;
    // m = 0: both parameter signs hold vacuously.
    let neg_a = m == 0 || a_curvature.1 < -SIGN_DEAD_BAND;
    let pos_a = m == 0 || a_curvature.0 > SIGN_DEAD_BAND;

    let class = if neg_a && (pos_x || linear_in_x) && (pos_v || linear_in_xdot) {
        SaddleClass::MinMax
    } else if neg_a && neg_x && neg_v {
        SaddleClass::MaxMax
    } else if pos_a && neg_x && neg_v {
        SaddleClass::MaxMin
    } else if pos_a && pos_x && pos_v {
        SaddleClass::MinMin
    } else {
        SaddleClass::Indeterminate
    };

    Ok(ClassificationReport {
        class,
        i_aa,
        x_curvature,
        xdot_curvature,
        a_curvature,
        linear_in_x,
        linear_in_xdot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::TimeGrid;

    fn constant_samples(grid: &TimeGrid, xx: f64, vv: f64, aa: Option<f64>) -> SecondOrderSamples {
        let n = grid.n_nodes();
        SecondOrderSamples {
            grid: grid.clone(),
            in_x: vec![DMatrix::from_element(1, 1, xx); n],
            in_xdot: vec![DMatrix::from_element(1, 1, vv); n],
            in_a: match aa {
                Some(v) => vec![DMatrix::from_element(1, 1, v); n],
                None => vec![DMatrix::zeros(0, 0); n],
            },
            boundary_in_a: None,
        }
    }

    #[test]
    fn strict_patterns_are_recognized() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let expect = [
            (2.0, 2.0, -2.0, SaddleClass::MinMax),
            (-2.0, -2.0, -2.0, SaddleClass::MaxMax),
            (-2.0, -2.0, 2.0, SaddleClass::MaxMin),
            (2.0, 2.0, 2.0, SaddleClass::MinMin),
        ];
        for (xx, vv, aa, class) in expect {
            let report = classify(&constant_samples(&grid, xx, vv, Some(aa))).unwrap();
            assert_eq!(report.class, class, "({xx}, {vv}, {aa})");
            assert!((report.i_aa[(0, 0)] - aa).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_signs_are_indeterminate() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let report = classify(&constant_samples(&grid, 2.0, -2.0, Some(-2.0))).unwrap();
        assert_eq!(report.class, SaddleClass::Indeterminate);
    }

    #[test]
    fn linear_state_slot_still_min_max() {
        // Curvature pattern of a state-linear integrand: in_x ≡ 0,
        // in_xdot = 1, integrated parameter curvature −5/9.
        let grid = TimeGrid::new(0.0, 1.0 / 3.0, 201).unwrap();
        let n = grid.n_nodes();
        let samples = SecondOrderSamples {
            grid: grid.clone(),
            in_x: vec![DMatrix::from_element(1, 1, 0.0); n],
            in_xdot: vec![DMatrix::from_element(1, 1, 1.0); n],
            in_a: grid
                .nodes()
                .iter()
                .map(|&t| DMatrix::from_element(1, 1, -12.0 * t + 9.0 * t * t))
                .collect(),
            boundary_in_a: None,
        };
        let report = classify(&samples).unwrap();
        assert_eq!(report.class, SaddleClass::MinMax);
        assert!(report.linear_in_x);
        assert!(!report.linear_in_xdot);
        assert!((report.i_aa[(0, 0)] + 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn linearity_does_not_rescue_other_patterns() {
        // Positive parameter curvature with linear slots: max-min demands
        // strictly negative curvature, so this is indeterminate.
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let report = classify(&constant_samples(&grid, 0.0, 0.0, Some(2.0))).unwrap();
        assert_eq!(report.class, SaddleClass::Indeterminate);
    }

    #[test]
    fn rounding_noise_reads_as_linear() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let report = classify(&constant_samples(&grid, 3e-12, 2.0, Some(-2.0))).unwrap();
        assert_eq!(report.class, SaddleClass::MinMax);
        assert!(report.linear_in_x);
    }

    #[test]
    fn no_parameter_classifies_by_trajectory_side() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let report = classify(&constant_samples(&grid, 2.0, 2.0, None)).unwrap();
        assert_eq!(report.class, SaddleClass::MinMax);
        assert_eq!(report.i_aa.nrows(), 0);
        let report = classify(&constant_samples(&grid, -2.0, -2.0, None)).unwrap();
        assert_eq!(report.class, SaddleClass::MaxMax);
    }

    #[test]
    fn boundary_term_shifts_the_integrated_block() {
        // Integrand parameter curvature 0 everywhere, boundary term −1.
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let mut samples = constant_samples(&grid, 0.0, 0.0, Some(0.0));
        samples.boundary_in_a = Some(DMatrix::from_element(1, 1, -1.0));
        let report = classify(&samples).unwrap();
        assert!((report.i_aa[(0, 0)] + 1.0).abs() < 1e-12);
        assert_eq!(report.class, SaddleClass::MinMax);
    }

    #[test]
    fn indefinite_parameter_block_is_indeterminate() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let n = grid.n_nodes();
        let block = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let samples = SecondOrderSamples {
            grid: grid.clone(),
            in_x: vec![DMatrix::from_element(1, 1, 2.0); n],
            in_xdot: vec![DMatrix::from_element(1, 1, 2.0); n],
            in_a: vec![block; n],
            boundary_in_a: None,
        };
        let report = classify(&samples).unwrap();
        assert_eq!(report.class, SaddleClass::Indeterminate);
    }
}
