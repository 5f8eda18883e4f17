use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{verify_solution, ModelKind, UcProblem};
use crate::error::{Error, Result};
use crate::lp::{LpSolution, SolveStatus, SolverBackend};
use crate::network::BusId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub fuel: f64,
    pub no_load: f64,
    pub startup: f64,
    pub reserve: f64,
    pub virtual_inertia: f64,
    pub total: f64,
}

impl CostBreakdown {
    /// Everything except start-ups.
    pub fn operation(&self) -> f64 {
        self.fuel + self.no_load
    }
}

/// The unit whose loss is studied for an hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyUnit {
    pub unit: usize,
    pub id: String,
    pub bus: BusId,
    /// Dispatch, MW.
    pub dispatch: f64,
}

/// Schedule returned by [`solve`]. Unit, branch and bus vectors follow the case's order;
/// inner vectors are hourly. Without a solution (see `status`) the schedules are empty and the
/// numeric fields are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSolution {
    pub kind: ModelKind,
    pub status: SolveStatus,
    pub objective: f64,
    pub costs: CostBreakdown,
    pub mip_gap: f64,
    pub wall_time: f64,
    pub backend: String,
    pub unit_ids: Vec<String>,
    pub bus_ids: Vec<BusId>,
    pub commitment: Vec<Vec<bool>>,
    pub startup: Vec<Vec<bool>>,
    pub dispatch: Vec<Vec<f64>>,
    pub reserve: Vec<Vec<f64>>,
    pub flows: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    /// Committed kinetic energy per hour, MWs.
    pub system_inertia: Vec<f64>,
    /// Average nodal inertia coefficient per hour, including virtual inertia.
    pub nodal_inertia: Vec<f64>,
    /// MWs per hour (zero for kinds without virtual inertia).
    pub virtual_inertia: Vec<f64>,
    pub largest_unit: Vec<Option<ContingencyUnit>>,
    /// Largest residual found by the independent re-check.
    pub max_violation: f64,
    /// Model values of the system and average nodal inertia variables, where the kind has them.
    #[serde(default)]
    pub solver_system_inertia: Option<Vec<f64>>,
    #[serde(default)]
    pub solver_nodal_inertia: Option<Vec<f64>>,
}

impl UcSolution {
    pub fn horizon(&self) -> usize {
        self.system_inertia.len()
    }

    pub fn committed_units(&self, hour: usize) -> usize {
        self.commitment.iter().filter(|u| u[hour]).count()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "solution".into(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()? + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// Hourly commitment matrix: `hour,<unit ids...>` with 0/1 entries.
    pub fn write_commitment_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["hour".to_string()];
        header.extend(self.unit_ids.iter().cloned());
        w.write_record(&header)?;
        for t in 0..self.horizon() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(self.commitment.iter().map(|u| u8::from(u[t]).to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Per-hour dispatch summary.
    pub fn write_hourly_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "hour",
            "committed",
            "generation_mw",
            "reserve_mw",
            "system_inertia_mws",
            "nodal_inertia",
            "virtual_inertia_mws",
            "largest_unit",
            "largest_unit_mw",
        ])?;
        for t in 0..self.horizon() {
            let gen: f64 = self.dispatch.iter().map(|p| p[t]).sum();
            let res: f64 = self.reserve.iter().map(|r| r[t]).sum();
            let (lu, lp) = match &self.largest_unit[t] {
                Some(c) => (c.id.clone(), c.dispatch.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                (t + 1).to_string(),
                self.committed_units(t).to_string(),
                gen.to_string(),
                res.to_string(),
                self.system_inertia[t].to_string(),
                self.nodal_inertia[t].to_string(),
                self.virtual_inertia[t].to_string(),
                lu,
                lp,
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Solves the MILP, then re-solves the LP with the commitment fixed to obtain clean continuous
/// values, and re-checks the result against every constraint family of the model.
///
/// Infeasible and time-limit-without-incumbent outcomes are returned as solutions with that
/// status and empty schedules.
pub fn solve(problem: &UcProblem, backend: &dyn SolverBackend) -> Result<UcSolution> {
    let opts = problem.config.solve_options();
    let mip = backend.solve(&problem.lp, &opts)?;
    if !mip.status.has_solution() {
        return Ok(empty_solution(problem, &mip, backend));
    }
    let fixed = problem.lp.fix_integers(&mip.columns)?;
    let lp = backend.solve(&fixed, &opts)?;
    if lp.status != SolveStatus::Optimal {
        return Err(Error::Backend {
            backend: backend.identity(),
            status: format!("fixed-commitment re-solve ended {:?}", lp.status),
        });
    }
    let mut sol = extract(problem, &lp.columns, &mip, backend);
    let check = verify_solution(problem, &sol);
    sol.max_violation = check.max_residual();
    if !check.passes(1e-6) {
        return Err(Error::Backend {
            backend: backend.identity(),
            status: format!("solution fails re-evaluation: {}", check.summary()),
        });
    }
    Ok(sol)
}

fn empty_solution(problem: &UcProblem, mip: &LpSolution, backend: &dyn SolverBackend) -> UcSolution {
    let case = &problem.case;
    UcSolution {
        kind: problem.kind,
        status: mip.status,
        objective: 0.0,
        costs: CostBreakdown::default(),
        mip_gap: 0.0,
        wall_time: mip.wall_time,
        backend: backend.identity(),
        unit_ids: case.generators.iter().map(|g| g.id.clone()).collect(),
        bus_ids: case.bus_ids(),
        commitment: Vec::new(),
        startup: Vec::new(),
        dispatch: Vec::new(),
        reserve: Vec::new(),
        flows: Vec::new(),
        angles: Vec::new(),
        system_inertia: Vec::new(),
        nodal_inertia: Vec::new(),
        virtual_inertia: Vec::new(),
        largest_unit: Vec::new(),
        max_violation: 0.0,
        solver_system_inertia: None,
        solver_nodal_inertia: None,
    }
}

fn extract(problem: &UcProblem, x: &[f64], mip: &LpSolution, backend: &dyn SolverBackend) -> UcSolution {
    let case = &problem.case;
    let ix = &problem.index;
    let nt = problem.horizon();
    let values = |cols: &Vec<Vec<crate::lp::ColId>>| -> Vec<Vec<f64>> {
        cols.iter().map(|row| row.iter().map(|c| x[c.0]).collect()).collect()
    };
    let flags = |cols: &Vec<Vec<crate::lp::ColId>>| -> Vec<Vec<bool>> {
        cols.iter().map(|row| row.iter().map(|c| x[c.0] > 0.5).collect()).collect()
    };
    let commitment = flags(&ix.commit);
    let startup = flags(&ix.startup);
    // Snap tiny solver noise on offline units to exact zeros.
    let mut dispatch = values(&ix.dispatch);
    let mut reserve = values(&ix.reserve);
    for g in 0..dispatch.len() {
        for t in 0..nt {
            if !commitment[g][t] {
                dispatch[g][t] = 0.0;
                reserve[g][t] = 0.0;
            }
        }
    }
    let virtual_inertia: Vec<f64> = match &ix.virtual_inertia {
        Some(cols) => cols.iter().map(|c| x[c.0]).collect(),
        None => vec![0.0; nt],
    };
    let system_inertia: Vec<f64> = (0..nt)
        .map(|t| {
            case.generators
                .iter()
                .zip(&commitment)
                .filter(|(_, u)| u[t])
                .map(|(g, _)| g.kinetic_energy())
                .sum()
        })
        .collect();
    let nodal_inertia = (0..nt)
        .map(|t| problem.nodal_coefficient(system_inertia[t] + virtual_inertia[t]))
        .collect();

    let largest_unit = (0..nt)
        .map(|t| {
            (0..case.generators.len())
                .filter(|&g| commitment[g][t])
                .max_by(|&a, &b| {
                    let ga = &case.generators[a];
                    let gb = &case.generators[b];
                    dispatch[a][t]
                        .total_cmp(&dispatch[b][t])
                        .then(ga.p_max.total_cmp(&gb.p_max))
                        .then(b.cmp(&a))
                })
                .map(|g| ContingencyUnit {
                    unit: g,
                    id: case.generators[g].id.clone(),
                    bus: case.generators[g].bus,
                    dispatch: dispatch[g][t],
                })
        })
        .collect();

    let mut costs = CostBreakdown::default();
    for (g, gen) in case.generators.iter().enumerate() {
        for t in 0..nt {
            costs.fuel += gen.cost * dispatch[g][t];
            costs.reserve += gen.reserve_cost * reserve[g][t];
            if commitment[g][t] {
                costs.no_load += gen.no_load_cost;
            }
            if startup[g][t] {
                costs.startup += gen.startup_cost;
            }
        }
    }
    costs.virtual_inertia = problem.vi_price * virtual_inertia.iter().sum::<f64>();
    costs.total = costs.fuel + costs.no_load + costs.startup + costs.reserve + costs.virtual_inertia;

    UcSolution {
        kind: problem.kind,
        status: mip.status,
        objective: costs.total,
        costs,
        mip_gap: mip.mip_gap,
        wall_time: mip.wall_time,
        backend: backend.identity(),
        unit_ids: case.generators.iter().map(|g| g.id.clone()).collect(),
        bus_ids: case.bus_ids(),
        commitment,
        startup,
        dispatch,
        reserve,
        flows: values(&ix.flow),
        angles: values(&ix.angle),
        system_inertia,
        nodal_inertia,
        virtual_inertia,
        largest_unit,
        max_violation: 0.0,
        solver_system_inertia: ix
            .system_inertia
            .as_ref()
            .map(|c| c.iter().map(|c| x[c.0]).collect()),
        solver_nodal_inertia: ix
            .nodal_inertia
            .as_ref()
            .map(|c| c.iter().map(|c| x[c.0]).collect()),
    }
}

/// Column vector of the model evaluated at a reported schedule.
pub fn solution_point(problem: &UcProblem, sol: &UcSolution) -> Result<Vec<f64>> {
    if !sol.status.has_solution() {
        return Err(Error::validation("solution carries a schedule"));
    }
    let ix = &problem.index;
    let mut x = vec![0.0; problem.lp.columns.len()];
    let mut put = |cols: &Vec<Vec<crate::lp::ColId>>, vals: &dyn Fn(usize, usize) -> f64| {
        for (i, row) in cols.iter().enumerate() {
            for (t, c) in row.iter().enumerate() {
                x[c.0] = vals(i, t);
            }
        }
    };
    put(&ix.dispatch, &|g, t| sol.dispatch[g][t]);
    put(&ix.reserve, &|g, t| sol.reserve[g][t]);
    put(&ix.commit, &|g, t| f64::from(u8::from(sol.commitment[g][t])));
    put(&ix.startup, &|g, t| f64::from(u8::from(sol.startup[g][t])));
    put(&ix.flow, &|k, t| sol.flows[k][t]);
    put(&ix.angle, &|n, t| sol.angles[n][t]);
    let gens = &problem.case.generators;
    if let Some(k) = &ix.rated {
        put(k, &|g, t| if sol.commitment[g][t] { gens[g].p_max } else { 0.0 });
    }
    if let Some(dm) = &ix.inertia_loss {
        put(dm, &|g, t| {
            if sol.commitment[g][t] {
                problem.nodal_coefficient(gens[g].kinetic_energy())
            } else {
                0.0
            }
        });
    }
    for t in 0..sol.horizon() {
        if let Some(c) = &ix.system_inertia {
            x[c[t].0] = sol.system_inertia[t];
        }
        if let Some(c) = &ix.nodal_inertia {
            x[c[t].0] = sol.nodal_inertia[t];
        }
        if let Some(c) = &ix.virtual_inertia {
            x[c[t].0] = sol.virtual_inertia[t];
        }
    }
    Ok(x)
}
