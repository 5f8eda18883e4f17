use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, SolveStatus, SolverBackend};
use crate::network::BusId;
use crate::scuc::{solution_point, UcProblem, UcSolution};

/// Locational prices, `[bus][hour]` in $/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSet {
    pub bus_ids: Vec<BusId>,
    pub reference_bus: BusId,
    pub lmp: Vec<Vec<f64>>,
    /// Reference-bus price per hour.
    pub energy: Vec<f64>,
    pub congestion: Vec<Vec<f64>>,
    /// Largest dispatch difference (MW) between the pricing LP and the priced schedule; nonzero
    /// values flag an LP with several optimal dispatches.
    pub dispatch_shift: f64,
}

impl PriceSet {
    /// Splits `lmp` into the reference-bus energy price and the remainder.
    pub fn from_lmp(bus_ids: Vec<BusId>, reference_bus: BusId, lmp: Vec<Vec<f64>>) -> Result<Self> {
        let r = bus_ids
            .iter()
            .position(|b| *b == reference_bus)
            .ok_or(Error::UnknownBus(reference_bus))?;
        let energy = lmp[r].clone();
        let congestion = lmp
            .iter()
            .map(|row| row.iter().zip(&energy).map(|(l, e)| l - e).collect())
            .collect();
        Ok(Self {
            bus_ids,
            reference_bus,
            lmp,
            energy,
            congestion,
            dispatch_shift: 0.0,
        })
    }

    pub fn horizon(&self) -> usize {
        self.energy.len()
    }

    pub fn average_lmp(&self) -> f64 {
        mean(self.lmp.iter().flatten().copied())
    }

    pub fn average_energy(&self) -> f64 {
        mean(self.energy.iter().copied())
    }

    /// Mean magnitude of the congestion component over bus-hours.
    pub fn average_congestion(&self) -> f64 {
        mean(self.congestion.iter().flatten().map(|c| c.abs()))
    }

    /// Largest `|lmp - energy - congestion|`.
    pub fn decomposition_residual(&self) -> f64 {
        self.lmp
            .iter()
            .zip(&self.congestion)
            .flat_map(|(l, c)| {
                l.iter()
                    .zip(c)
                    .zip(&self.energy)
                    .map(|((l, c), e)| (l - e - c).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `bus,hour,lmp,energy,congestion` with 1-based hours.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bus", "hour", "lmp", "energy", "congestion"])?;
        for (n, bus) in self.bus_ids.iter().enumerate() {
            for t in 0..self.horizon() {
                w.write_record([
                    bus.to_string(),
                    (t + 1).to_string(),
                    self.lmp[n][t].to_string(),
                    self.energy[t].to_string(),
                    self.congestion[n][t].to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Copy of the model with commitment and start-ups fixed at the schedule's values.
pub fn fixed_commitment_lp(problem: &UcProblem, sol: &UcSolution) -> Result<LinearProgram> {
    let x = solution_point(problem, sol)?;
    problem.lp.fix_integers(&x)
}

/// Prices the schedule: fixes its binaries, re-solves the LP and reads the nodal balance duals.
pub fn price(problem: &UcProblem, sol: &UcSolution, backend: &dyn SolverBackend) -> Result<PriceSet> {
    let fixed = fixed_commitment_lp(problem, sol)?;
    let lp = backend.solve(&fixed, &problem.config.solve_options())?;
    let duals = match (lp.status, &lp.row_duals) {
        (SolveStatus::Optimal, Some(d)) => d,
        _ => {
            let x = solution_point(problem, sol)?;
            let report = fixed
                .violations(&x, 1e-6)
                .iter()
                .take(10)
                .map(|v| format!("{}={:e}", v.name, v.amount))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::PricingInfeasible {
                report: format!(
                    "status {:?}; schedule residuals: {}",
                    lp.status,
                    if report.is_empty() { "none".into() } else { report }
                ),
            });
        }
    };
    let lmp = problem
        .index
        .balance
        .iter()
        .map(|rows| rows.iter().map(|r| duals[r.0]).collect())
        .collect();
    let mut prices = PriceSet::from_lmp(problem.case.bus_ids(), problem.case.reference_bus(), lmp)?;
    prices.dispatch_shift = problem
        .index
        .dispatch
        .iter()
        .zip(&sol.dispatch)
        .flat_map(|(cols, p)| cols.iter().zip(p).map(|(c, v)| (lp.columns[c.0] - v).abs()))
        .fold(0.0, f64::max);
    Ok(prices)
}
