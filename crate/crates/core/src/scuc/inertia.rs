use std::path::Path;

use serde::{Deserialize, Serialize};

use super::UcSolution;
use crate::error::{Error, Result};
use crate::network::GridCase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourInertia {
    /// 1-based.
    pub hour: usize,
    pub committed: usize,
    /// Committed kinetic energy recomputed from the commitment, MWs.
    pub system_inertia: f64,
    pub nodal_inertia: f64,
    pub virtual_inertia: f64,
    /// Kinetic energy per committed unit, MWs; `None` when nothing is committed.
    pub average_unit_inertia: Option<f64>,
    /// `|recomputed - model|` for the system inertia.
    pub model_mismatch: f64,
}

/// Per-hour inertia profile of a schedule.
pub fn summarize_inertia(case: &GridCase, sol: &UcSolution) -> Result<Vec<HourInertia>> {
    if !sol.status.has_solution() {
        return Err(Error::validation("solution carries a schedule"));
    }
    if sol.commitment.len() != case.generators.len() {
        return Err(Error::validation("solution and case have the same units"));
    }
    Ok((0..sol.horizon())
        .map(|t| {
            let on: Vec<_> = case
                .generators
                .iter()
                .zip(&sol.commitment)
                .filter(|(_, u)| u[t])
                .map(|(g, _)| g)
                .collect();
            let energy: f64 = on.iter().map(|g| g.kinetic_energy()).sum();
            let model = sol
                .solver_system_inertia
                .as_ref()
                .map_or(sol.system_inertia[t], |m| m[t]);
            HourInertia {
                hour: t + 1,
                committed: on.len(),
                system_inertia: energy,
                nodal_inertia: sol.nodal_inertia[t],
                virtual_inertia: sol.virtual_inertia[t],
                average_unit_inertia: (!on.is_empty()).then(|| energy / on.len() as f64),
                model_mismatch: (energy - model).abs(),
            }
        })
        .collect())
}

pub fn write_inertia_csv(rows: &[HourInertia], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "hour",
        "committed",
        "system_inertia_mws",
        "nodal_inertia",
        "virtual_inertia_mws",
        "average_unit_inertia_mws",
    ])?;
    for r in rows {
        w.write_record([
            r.hour.to_string(),
            r.committed.to_string(),
            r.system_inertia.to_string(),
            r.nodal_inertia.to_string(),
            r.virtual_inertia.to_string(),
            r.average_unit_inertia.map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
