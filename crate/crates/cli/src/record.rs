//! Serialized artifacts written by the command-line front end.
//!
//! A [`SolutionRecord`] captures everything needed to audit a solve after the
//! fact: the converged unknowns, the certification conditions with their
//! thresholds, the full trajectory table, and an echo of the configuration
//! that produced the run. Records round-trip through JSON; floating-point
//! values use serde_json's shortest round-trip encoding, so reading a record
//! back recovers every f64 bit-exactly.

use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use varimax_core::{ElSolution, OcSolution};

/// One certification condition: a named scalar measured on the solution,
/// the threshold it must stay under, and whether it did.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl ConditionEntry {
    pub fn new(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            passed: value.is_finite() && value.abs() <= threshold,
        }
    }
}

/// Node-by-node trajectory data as a rectangular table. The first column is
/// always time and rows are strictly increasing in it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TrajectoryTable {
    /// Builds a table from parallel column groups. Each group contributes
    /// `dim` columns named `prefix1..prefixdim` (or just `prefix` when the
    /// group is one-dimensional).
    fn build(grid_times: &[f64], groups: &[(&str, &varimax_core::Trajectory)]) -> Self {
        let mut columns = vec!["t".to_string()];
        for (prefix, traj) in groups {
            let dim = traj.dim();
            if dim == 1 {
                columns.push((*prefix).to_string());
            } else {
                for k in 1..=dim {
                    columns.push(format!("{prefix}{k}"));
                }
            }
        }
        let rows = grid_times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut row = vec![t];
                for (_, traj) in groups {
                    row.extend(traj.value(i).iter().copied());
                }
                row
            })
            .collect();
        Self { columns, rows }
    }
}

/// Echo of the resolved configuration a record was produced under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub n_nodes: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub guess_a: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guess_xdot0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guess_p0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guess_tf: Option<f64>,
}

/// Complete, self-describing result of one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub problem: String,
    pub solver: String,
    pub converged: bool,
    pub a_star: Vec<f64>,
    pub tf: f64,
    pub cost: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub classification: String,
    pub conditions: Vec<ConditionEntry>,
    pub trajectory: TrajectoryTable,
    pub tool_version: String,
    pub config: ConfigEcho,
    /// RFC 3339 wall-clock time of the run; the only field that varies
    /// between identical runs.
    pub timestamp: String,
}

impl SolutionRecord {
    pub fn from_el(
        solution: &ElSolution,
        solver: &str,
        conditions: Vec<ConditionEntry>,
        config: ConfigEcho,
    ) -> Self {
        let times = solution.x.grid().nodes();
        let trajectory =
            TrajectoryTable::build(&times, &[("x", &solution.x), ("xdot", &solution.xdot)]);
        Self {
            problem: solution.problem_name.clone(),
            solver: solver.to_string(),
            converged: solution.converged,
            a_star: solution.a.clone(),
            tf: solution.tf,
            cost: solution.cost,
            residual_norm: solution.residual_norm,
            iterations: solution.iterations,
            classification: solution.classification.class.label().to_string(),
            conditions,
            trajectory,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn from_oc(
        solution: &OcSolution,
        solver: &str,
        conditions: Vec<ConditionEntry>,
        config: ConfigEcho,
    ) -> Self {
        let times = solution.x.grid().nodes();
        let trajectory = TrajectoryTable::build(
            &times,
            &[("x", &solution.x), ("p", &solution.p), ("u", &solution.u)],
        );
        Self {
            problem: solution.problem_name.clone(),
            solver: solver.to_string(),
            converged: solution.converged,
            a_star: solution.a.clone(),
            tf: solution.tf,
            cost: solution.cost,
            residual_norm: solution.residual_norm,
            iterations: solution.iterations,
            classification: solution.classification.class.label().to_string(),
            conditions,
            trajectory,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).context("serializing solution record")?;
        let mut file =
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        file.write_all(body.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    /// Writes only the trajectory table, as CSV with full-precision cells.
    pub fn write_trajectory_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.trajectory.columns.join(","));
        out.push('\n');
        for row in &self.trajectory.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).with_context(|| format!("creating {}", path.display()))
    }
}

/// Companion summary written next to a scan CSV: the worst-case cost per
/// candidate and which candidate wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSummary {
    pub problem: String,
    pub labels: Vec<String>,
    /// Frozen parameter value for each candidate; `null` marks the interior
    /// min-max control.
    pub frozen_a: Vec<Option<Vec<f64>>>,
    pub worst_case: Vec<f64>,
    pub winner: usize,
    pub winner_label: String,
    pub steps: usize,
    pub a_min: Vec<f64>,
    pub a_max: Vec<f64>,
    pub n_nodes: usize,
    pub interior_in_box: bool,
    pub tool_version: String,
    pub timestamp: String,
}

impl ScanSummary {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).context("serializing scan summary")?;
        std::fs::write(path, format!("{body}\n"))
            .with_context(|| format!("creating {}", path.display()))
    }
}
