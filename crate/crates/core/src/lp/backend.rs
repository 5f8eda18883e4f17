use std::time::Instant;

use highs::{ColProblem, HighsModelStatus, HighsSolutionStatus, Sense};
use serde::{Deserialize, Serialize};

use super::LinearProgram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub mip_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub threads: u32,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mip_gap: 1e-3,
            time_limit: 1800.0,
            threads: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Optimal, or within the requested MIP gap.
    Optimal,
    Infeasible,
    /// Stopped at the time limit with a feasible incumbent.
    TimeLimit,
    /// Stopped at the time limit without any feasible point.
    TimeLimitNoSolution,
    Unbounded,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::TimeLimit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    /// Relative MIP gap achieved (0 for pure LPs).
    pub mip_gap: f64,
    pub columns: Vec<f64>,
    /// Row duals for LPs; `None` for MIPs. Sign: the change in objective per unit
    /// increase of the row's binding bound.
    pub row_duals: Option<Vec<f64>>,
    pub wall_time: f64,
}

/// A MILP/LP solver. Implementations own no state shared between calls, so one instance can
/// serve concurrent solves.
pub trait SolverBackend: Send + Sync {
    fn identity(&self) -> String;

    /// Whether repeated solves with the same options return identical results.
    fn deterministic(&self) -> bool;

    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution>;
}

/// HiGHS through its C API.
#[derive(Debug, Clone, Default)]
pub struct HighsBackend;

impl SolverBackend for HighsBackend {
    fn identity(&self) -> String {
        "highs".to_string()
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution> {
        lp.validate()?;
        let start = Instant::now();
        let fail = |status: String| Error::Backend {
            backend: self.identity(),
            status,
        };

        let mut pb = ColProblem::default();
        let rows: Vec<_> = lp.rows.iter().map(|r| pb.add_row(r.lower..=r.upper)).collect();
        let mut by_col: Vec<Vec<(highs::Row, f64)>> = vec![Vec::new(); lp.columns.len()];
        for (ri, r) in lp.rows.iter().enumerate() {
            for (c, a) in &r.coefficients {
                by_col[c.0].push((rows[ri], *a));
            }
        }
        for (c, entries) in lp.columns.iter().zip(&by_col) {
            pb.add_column_with_integrality(c.cost, c.lower..=c.upper, entries, c.integer);
        }

        let mut model = pb
            .try_optimise(Sense::Minimise)
            .map_err(|s| fail(format!("model rejected: {s:?}")))?;
        model.make_quiet();
        model.set_option("threads", opts.threads.max(1) as i32);
        model.set_option("random_seed", (opts.seed % i32::MAX as u64) as i32);
        model.set_option("time_limit", opts.time_limit);
        model.set_option("mip_rel_gap", opts.mip_gap);
        model.set_option("primal_feasibility_tolerance", 1e-9);
        model.set_option("dual_feasibility_tolerance", 1e-9);
        model.set_option("mip_feasibility_tolerance", 1e-9);
        let solved = model
            .try_solve()
            .map_err(|s| fail(format!("run failed: {s:?}")))?;

        let is_mip = lp.is_mip();
        let has_point = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
            HighsModelStatus::ReachedTimeLimit if has_point => SolveStatus::TimeLimit,
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimitNoSolution,
            other => return Err(fail(format!("{other:?}"))),
        };
        let (columns, row_duals) = if status.has_solution() {
            let sol = solved.get_solution();
            let duals = (!is_mip).then(|| sol.dual_rows().to_vec());
            (sol.columns().to_vec(), duals)
        } else {
            (Vec::new(), None)
        };
        let objective = if status.has_solution() {
            lp.objective(&columns)
        } else {
            f64::NAN
        };
        Ok(LpSolution {
            status,
            objective,
            mip_gap: if is_mip && status.has_solution() {
                solved.mip_gap()
            } else {
                0.0
            },
            columns,
            row_duals,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

/// Backend named by `SCUC_BACKEND` (default `highs`).
pub fn backend_from_env() -> Result<Box<dyn SolverBackend>> {
    backend_by_name(&std::env::var("SCUC_BACKEND").unwrap_or_else(|_| "highs".into()))
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn SolverBackend>> {
    match name.trim().to_ascii_lowercase().as_str() {
        "" | "highs" => Ok(Box::new(HighsBackend)),
        other => Err(Error::Config(format!(
            "unknown solver backend `{other}` (available: highs)"
        ))),
    }
}
