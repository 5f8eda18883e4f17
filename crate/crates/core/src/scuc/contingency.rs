use serde::{Deserialize, Serialize};

use super::UcSolution;
use crate::dynamics::{simulate_swing, Disturbance, SimulationOptions, SimulationResult};
use crate::error::{Error, Result};
use crate::network::{build_laplacian, kron_reduce, GridCase, ReducedNetwork};
use crate::units::inertia_coefficient;

/// Post-contingency study of one unit trip in one hour of a schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencyStudy {
    /// 0-based hour.
    pub hour: usize,
    pub unit: usize,
    pub unit_id: String,
    /// Lost power, MW.
    pub power_loss_mw: f64,
    pub result: SimulationResult,
}

impl ContingencyStudy {
    /// Largest windowed |RoCoF| over every retained bus, Hz/s.
    pub fn max_abs_rocof(&self) -> f64 {
        self.result.max_abs_rocof.iter().cloned().fold(0.0, f64::max)
    }
}

/// Reduced network, per-bus inertia coefficients and trip disturbance for `unit` at `hour`.
pub fn contingency_setup(
    case: &GridCase,
    sol: &UcSolution,
    hour: usize,
    unit: usize,
) -> Result<(ReducedNetwork, Vec<f64>, Disturbance)> {
    if !sol.status.has_solution() || hour >= sol.horizon() {
        return Err(Error::validation(format!("solution has a schedule for hour {}", hour + 1)));
    }
    let gen = case
        .generators
        .get(unit)
        .ok_or_else(|| Error::validation(format!("unit index {unit} exists")))?;
    if !sol.commitment[unit][hour] {
        return Err(Error::validation(format!(
            "contingency unit {} is committed in hour {}",
            gen.id,
            hour + 1
        )));
    }
    let retained = case.generator_buses();
    let rn = kron_reduce(&build_laplacian(case, None)?, &retained)?;
    let coeff = |h: f64, p: f64| inertia_coefficient(h, p, case.f0, case.base_mva);
    let mut inertia = vec![0.0; rn.len()];
    for (g, unit_data) in case.generators.iter().enumerate() {
        if sol.commitment[g][hour] {
            inertia[rn.position(unit_data.bus)?] += coeff(unit_data.inertia_h, unit_data.p_max);
        }
    }
    // Virtual inertia is spread evenly over the retained buses.
    let vi = 2.0 * sol.virtual_inertia[hour]
        / (crate::units::omega0(case.f0) * case.base_mva * rn.len() as f64);
    inertia.iter_mut().for_each(|m| *m += vi);
    // Built directly: a zero-MW trip is a valid (flat) study here.
    let dist = Disturbance {
        event_bus: gen.bus,
        power_loss: sol.dispatch[unit][hour] / case.base_mva,
        inertia_loss: coeff(gen.inertia_h, gen.p_max) / rn.len() as f64,
    };
    Ok((rn, inertia, dist))
}

/// Simulates the trip of `unit` (default: the hour's largest committed unit).
pub fn simulate_contingency(
    case: &GridCase,
    sol: &UcSolution,
    hour: usize,
    unit: Option<usize>,
    opts: &SimulationOptions,
) -> Result<ContingencyStudy> {
    let unit = match unit {
        Some(u) => u,
        None => sol
            .largest_unit
            .get(hour)
            .and_then(|c| c.as_ref())
            .map(|c| c.unit)
            .ok_or_else(|| Error::validation(format!("a unit is committed in hour {}", hour + 1)))?,
    };
    let (rn, inertia, dist) = contingency_setup(case, sol, hour, unit)?;
    let injections = vec![0.0; rn.len()];
    let result = simulate_swing(&rn, &inertia, &injections, &dist, opts)?;
    Ok(ContingencyStudy {
        hour,
        unit,
        unit_id: case.generators[unit].id.clone(),
        power_loss_mw: sol.dispatch[unit][hour],
        result,
    })
}
