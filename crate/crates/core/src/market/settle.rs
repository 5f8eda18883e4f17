use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PriceSet;
use crate::error::{Error, Result};
use crate::network::GridCase;
use crate::scuc::{ModelKind, UcSolution};

/// Money flows of one hour, $.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HourSettlement {
    /// Gross demand times its bus price.
    pub load_payment: f64,
    /// Thermal and renewable output times the bus price.
    pub generator_revenue: f64,
    /// Fuel, no-load, start-up and reserve cost of thermal units.
    pub generator_cost: f64,
    pub generator_rent: f64,
    pub congestion_revenue: f64,
    /// Congestion revenue rebuilt from branch flows and price differences.
    pub flow_congestion_rent: f64,
    pub virtual_inertia_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub kind: ModelKind,
    pub hours: Vec<HourSettlement>,
    /// Hourly averages.
    pub average: HourSettlement,
    pub average_lmp: f64,
    pub average_energy_lmp: f64,
    pub average_congestion_lmp: f64,
}

impl Settlement {
    /// Largest relative mismatch of `load payment = revenue + congestion revenue`, with the
    /// congestion revenue taken from branch flows.
    pub fn identity_residual(&self) -> f64 {
        self.hours
            .iter()
            .map(|h| {
                let gap = h.load_payment - h.generator_revenue - h.flow_congestion_rent;
                gap.abs() / h.load_payment.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `hour,load_payment,...` with 1-based hours.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(HEADER)?;
        for (t, h) in self.hours.iter().enumerate() {
            w.write_record(row((t + 1).to_string(), h))?;
        }
        w.write_record(row("average".into(), &self.average))?;
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

const HEADER: [&str; 9] = [
    "hour",
    "load_payment",
    "generator_revenue",
    "generator_cost",
    "generator_rent",
    "congestion_revenue",
    "flow_congestion_rent",
    "virtual_inertia_cost",
    "identity_residual",
];

fn row(label: String, h: &HourSettlement) -> Vec<String> {
    vec![
        label,
        h.load_payment.to_string(),
        h.generator_revenue.to_string(),
        h.generator_cost.to_string(),
        h.generator_rent.to_string(),
        h.congestion_revenue.to_string(),
        h.flow_congestion_rent.to_string(),
        h.virtual_inertia_cost.to_string(),
        (h.load_payment - h.generator_revenue - h.congestion_revenue).to_string(),
    ]
}

/// Settles a priced schedule. `vi_price` is the model's virtual-inertia price ($/MWs·h).
pub fn settle(prices: &PriceSet, sol: &UcSolution, case: &GridCase, vi_price: f64) -> Result<Settlement> {
    if !sol.status.has_solution() {
        return Err(Error::validation("solution carries a schedule"));
    }
    if prices.horizon() != sol.horizon() || prices.bus_ids != case.bus_ids() {
        return Err(Error::validation("prices, schedule and case cover the same buses and hours"));
    }
    let lmp_at = |bus, t: usize| -> Result<f64> { Ok(prices.lmp[case.bus_index(bus)?][t]) };
    let mut hours = Vec::with_capacity(sol.horizon());
    for t in 0..sol.horizon() {
        let mut h = HourSettlement::default();
        for bus in &case.buses {
            let price = lmp_at(bus.id, t)?;
            h.load_payment += price * case.demand(bus.id, t);
            h.generator_revenue += price * case.renewable(bus.id, t);
        }
        for (g, gen) in case.generators.iter().enumerate() {
            let p = sol.dispatch[g][t];
            h.generator_revenue += lmp_at(gen.bus, t)? * p;
            h.generator_cost += gen.cost * p + gen.reserve_cost * sol.reserve[g][t];
            if sol.commitment[g][t] {
                h.generator_cost += gen.no_load_cost;
            }
            if sol.startup[g][t] {
                h.generator_cost += gen.startup_cost;
            }
        }
        for (k, br) in case.branches.iter().enumerate() {
            h.flow_congestion_rent += sol.flows[k][t] * (lmp_at(br.to_bus, t)? - lmp_at(br.from_bus, t)?);
        }
        h.generator_rent = h.generator_revenue - h.generator_cost;
        h.congestion_revenue = h.load_payment - h.generator_revenue;
        h.virtual_inertia_cost = vi_price * sol.virtual_inertia[t];
        hours.push(h);
    }
    let n = hours.len().max(1) as f64;
    let avg = |f: fn(&HourSettlement) -> f64| hours.iter().map(f).sum::<f64>() / n;
    let average = HourSettlement {
        load_payment: avg(|h| h.load_payment),
        generator_revenue: avg(|h| h.generator_revenue),
        generator_cost: avg(|h| h.generator_cost),
        generator_rent: avg(|h| h.generator_rent),
        congestion_revenue: avg(|h| h.congestion_revenue),
        flow_congestion_rent: avg(|h| h.flow_congestion_rent),
        virtual_inertia_cost: avg(|h| h.virtual_inertia_cost),
    };
    Ok(Settlement {
        kind: sol.kind,
        hours,
        average,
        average_lmp: prices.average_lmp(),
        average_energy_lmp: prices.average_energy(),
        average_congestion_lmp: prices.average_congestion(),
    })
}

/// One row per model, mirroring a cross-model market comparison.
pub fn write_market_summary_csv(rows: &[Settlement], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "model",
        "average_lmp",
        "average_energy_lmp",
        "average_congestion_lmp",
        "load_payment",
        "generator_revenue",
        "generator_cost",
        "generator_rent",
        "congestion_revenue",
        "identity_residual",
    ])?;
    for s in rows {
        let a = &s.average;
        w.write_record([
            s.kind.to_string(),
            s.average_lmp.to_string(),
            s.average_energy_lmp.to_string(),
            s.average_congestion_lmp.to_string(),
            a.load_payment.to_string(),
            a.generator_revenue.to_string(),
            a.generator_cost.to_string(),
            a.generator_rent.to_string(),
            a.congestion_revenue.to_string(),
            s.identity_residual().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
