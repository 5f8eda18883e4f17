//! Re-evaluates a reported schedule against every constraint family of its model, straight from
//! the case data, without looking at the solver's rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{UcProblem, UcSolution};
use crate::network::BusClass;

/// Largest residual per constraint family (0 when satisfied).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub residuals: BTreeMap<String, f64>,
    /// Largest surrogate value over committed contingencies, Hz/s (LRC kinds).
    pub max_surrogate_rocof: Option<f64>,
    /// Largest system RoCoF implied by the headroom rows, Hz/s (ERC kinds).
    pub max_system_rocof: Option<f64>,
}

impl Verification {
    fn record(&mut self, family: &str, residual: f64) {
        let r = if residual.is_nan() { f64::INFINITY } else { residual.max(0.0) };
        let e = self.residuals.entry(family.to_string()).or_insert(0.0);
        *e = e.max(r);
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    pub fn summary(&self) -> String {
        self.residuals
            .iter()
            .filter(|(_, v)| **v > 0.0)
            .map(|(k, v)| format!("{k}={v:e}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Checks `sol` against the families of `problem.kind`. Residuals are in the family's own
/// units: MW for power rows, Hz/s for RoCoF rows, MWs for inertia, 1 for logic, and relative
/// for the cost breakdown.
pub fn verify_solution(problem: &UcProblem, sol: &UcSolution) -> Verification {
    let mut out = Verification::default();
    if !sol.status.has_solution() {
        return out;
    }
    let case = &problem.case;
    let cfg = &problem.config;
    let gens = &case.generators;
    let nt = problem.horizon();
    let ng = gens.len();
    let on = |g: usize, t: usize| sol.commitment[g][t];
    let u = |g: usize, t: usize| f64::from(u8::from(on(g, t)));

    for (g, gen) in gens.iter().enumerate() {
        for t in 0..nt {
            let (p, r) = (sol.dispatch[g][t], sol.reserve[g][t]);
            out.record("generation_bounds", gen.p_min * u(g, t) - p);
            out.record("generation_bounds", p + r - gen.p_max * u(g, t));
            out.record("generation_bounds", -p);
            out.record("reserve_bounds", -r);
            out.record("reserve_bounds", r - gen.reserve_cap * u(g, t));
            let pool: f64 = (0..ng)
                .filter(|&j| !(cfg.reserve_excludes_self && j == g))
                .map(|j| sol.reserve[j][t])
                .sum();
            out.record("reserve_adequacy", p + r - pool);
            if t >= 1 {
                let prev = sol.dispatch[g][t - 1];
                out.record("ramping", (p - prev).abs() - gen.ramp);
            }
            let was_on = t >= 1 && on(g, t - 1);
            let started = sol.startup[g][t];
            let logic_ok = (!on(g, t) || was_on || started)
                && (!started || on(g, t))
                && !(started && was_on);
            out.record("startup_logic", if logic_ok { 0.0 } else { 1.0 });
        }
    }

    let base = case.base_mva;
    let reference = case.reference_bus();
    for (n, bus) in case.buses.iter().enumerate() {
        for t in 0..nt {
            let mut net = case.renewable(bus.id, t) - case.demand(bus.id, t);
            net += gens
                .iter()
                .enumerate()
                .filter(|(_, g)| g.bus == bus.id)
                .map(|(g, _)| sol.dispatch[g][t])
                .sum::<f64>();
            for (k, br) in case.branches.iter().enumerate() {
                if br.to_bus == bus.id {
                    net += sol.flows[k][t];
                }
                if br.from_bus == bus.id {
                    net -= sol.flows[k][t];
                }
            }
            out.record("balance", net.abs());
            if bus.id == reference {
                out.record("reference_angle", sol.angles[n][t].abs());
            }
        }
    }
    for (k, br) in case.branches.iter().enumerate() {
        let (Ok(from), Ok(to)) = (case.bus_index(br.from_bus), case.bus_index(br.to_bus)) else {
            out.record("flow_definition", f64::INFINITY);
            continue;
        };
        for t in 0..nt {
            let f = sol.flows[k][t];
            let dc = base * br.susceptance * (sol.angles[from][t] - sol.angles[to][t]);
            out.record("flow_definition", (f - dc).abs());
            out.record("flow_limits", f.abs() - br.capacity);
        }
    }

    let energy = |t: usize| -> f64 {
        (0..ng).filter(|&g| on(g, t)).map(|g| gens[g].kinetic_energy()).sum()
    };
    for t in 0..nt {
        let e = energy(t);
        out.record("system_inertia", (e - sol.system_inertia[t]).abs());
        let vi = sol.virtual_inertia[t];
        let nodal = problem.nodal_coefficient(e + vi);
        out.record(
            "nodal_inertia",
            (nodal - sol.nodal_inertia[t]).abs() / problem.nodal_coefficient(1.0),
        );
        if let Some(m) = &sol.solver_system_inertia {
            out.record("system_inertia", (m[t] - e).abs());
        }
        if let Some(m) = &sol.solver_nodal_inertia {
            out.record("nodal_inertia", (m[t] - nodal).abs() / problem.nodal_coefficient(1.0));
        }
        if problem.kind.has_vi() {
            out.record("virtual_inertia_budget", vi - cfg.vi_budget);
            out.record("virtual_inertia_budget", -vi);
        } else {
            out.record("virtual_inertia_budget", vi.abs());
        }
    }

    if problem.kind.is_erc() {
        let factor = problem.headroom_factor();
        let mut worst = 0.0_f64;
        for t in 0..nt {
            let pool = energy(t) + sol.virtual_inertia[t];
            for (g, gen) in gens.iter().enumerate().filter(|(g, _)| on(*g, t)) {
                let remaining = pool - gen.kinetic_energy();
                let p = sol.dispatch[g][t];
                out.record("system_rocof", p - factor * remaining);
                if p > 0.0 {
                    worst = worst.max(p * case.f0 / (2.0 * remaining.max(0.0)));
                }
            }
        }
        out.max_system_rocof = Some(worst);
    }

    if problem.kind.is_lrc() {
        let mut worst = f64::NEG_INFINITY;
        for t in 0..nt {
            let m = sol.nodal_inertia[t];
            for g in (0..ng).filter(|&g| on(g, t)) {
                let dm = problem.nodal_coefficient(gens[g].kinetic_energy());
                let x = [sol.dispatch[g][t] / base, m, dm];
                let surfaces = &problem.contingency_surfaces[g];
                for class in [BusClass::Local, BusClass::NonLocal] {
                    let v = surfaces.get(class).eval(&x);
                    worst = worst.max(v);
                    out.record("locational_rocof", v - cfg.rocof_lim);
                }
            }
        }
        out.max_surrogate_rocof = worst.is_finite().then_some(worst);
    }

    let c = &sol.costs;
    let parts = c.fuel + c.no_load + c.startup + c.reserve + c.virtual_inertia;
    out.record(
        "cost_breakdown",
        (parts - sol.objective).abs() / sol.objective.abs().max(1.0),
    );
    out
}
