use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bus number as it appears in the case file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: u32,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Series susceptance in p.u. on the system base.
    pub susceptance: f64,
    /// Thermal limit in MW.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    /// Hourly ramp limit, MW/h.
    pub ramp: f64,
    /// Reserve capability, MW.
    pub reserve_cap: f64,
    /// Inertia constant in seconds on the machine base (`p_max`).
    pub inertia_h: f64,
    /// Marginal energy cost, $/MWh.
    pub cost: f64,
    /// $/h while committed.
    pub no_load_cost: f64,
    /// $ per start.
    pub startup_cost: f64,
    /// $/MWh of scheduled reserve.
    pub reserve_cost: f64,
}

impl Generator {
    /// Stored kinetic energy at rated power, MWs.
    pub fn kinetic_energy(&self) -> f64 {
        crate::units::kinetic_energy(self.inertia_h, self.p_max)
    }
}

/// Static network, generator fleet and hourly profiles.
///
/// Build through [`GridCase::from_json_str`], [`load_case`] or [`GridCase::new`]; all of them
/// validate the case and index the buses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCase {
    #[serde(default)]
    pub name: String,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    /// Bus -> hourly demand (MW). Buses without an entry carry no load.
    pub load: BTreeMap<BusId, Vec<f64>>,
    /// Bus -> hourly renewable forecast (MW).
    #[serde(default)]
    pub renewables: BTreeMap<BusId, Vec<f64>>,
    pub f0: f64,
    pub base_mva: f64,
    #[serde(skip)]
    index: HashMap<BusId, usize>,
    #[serde(skip)]
    horizon: usize,
}

/// Reads and validates a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<GridCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    GridCase::from_json_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            context: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Bundled IEEE 24-bus case as shipped.
pub const IEEE24_JSON: &str = include_str!("../../data/ieee24.json");

impl GridCase {
    /// Assembles and validates a case from its parts.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        load: BTreeMap<BusId, Vec<f64>>,
        renewables: BTreeMap<BusId, Vec<f64>>,
        f0: f64,
        base_mva: f64,
    ) -> Result<Self> {
        let mut case = GridCase {
            name: name.into(),
            buses,
            branches,
            generators,
            load,
            renewables,
            f0,
            base_mva,
            index: HashMap::new(),
            horizon: 0,
        };
        case.finish()?;
        Ok(case)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut case: GridCase = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("case JSON (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        case.finish()?;
        Ok(case)
    }

    /// The bundled 24-bus, 38-line, 38-unit test system.
    pub fn ieee24() -> Self {
        Self::from_json_str(IEEE24_JSON).expect("bundled case is valid")
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn finish(&mut self) -> Result<()> {
        self.index = self
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect();
        if self.index.len() != self.buses.len() {
            return Err(Error::validation("bus ids are unique"));
        }
        self.horizon = self
            .load
            .values()
            .chain(self.renewables.values())
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        self.validate()
    }

    /// Checks every case invariant.
    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::validation("case has at least one bus"));
        }
        if !(self.f0 > 0.0) || !(self.base_mva > 0.0) {
            return Err(Error::validation("f0 > 0 and base_mva > 0"));
        }
        if self.horizon == 0 {
            return Err(Error::validation("load profile covers at least one hour"));
        }
        for br in &self.branches {
            for bus in [br.from_bus, br.to_bus] {
                if !self.index.contains_key(&bus) {
                    return Err(Error::validation(format!(
                        "branch {} references bus {bus}, which does not exist",
                        br.id
                    )));
                }
            }
            if br.from_bus == br.to_bus {
                return Err(Error::validation(format!(
                    "branch {} has from_bus != to_bus",
                    br.id
                )));
            }
            if !(br.susceptance > 0.0) || !(br.capacity > 0.0) {
                return Err(Error::validation(format!(
                    "branch {} has susceptance > 0 and capacity > 0",
                    br.id
                )));
            }
        }
        for g in &self.generators {
            if !self.index.contains_key(&g.bus) {
                return Err(Error::validation(format!(
                    "generator {} references bus {}, which does not exist",
                    g.id, g.bus
                )));
            }
            if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
                return Err(Error::validation(format!(
                    "generator {} has 0 <= p_min <= p_max",
                    g.id
                )));
            }
            if !(g.inertia_h > 0.0) {
                return Err(Error::validation(format!("generator {} has H > 0", g.id)));
            }
            let costs = [g.cost, g.no_load_cost, g.startup_cost, g.reserve_cost];
            if costs.iter().any(|c| !(*c >= 0.0)) || g.ramp < 0.0 || g.reserve_cap < 0.0 {
                return Err(Error::validation(format!(
                    "generator {} has non-negative costs, ramp and reserve capability",
                    g.id
                )));
            }
        }
        for (what, profile) in [("load", &self.load), ("renewables", &self.renewables)] {
            for (bus, values) in profile {
                if !self.index.contains_key(bus) {
                    return Err(Error::validation(format!(
                        "{what} profile references bus {bus}, which does not exist"
                    )));
                }
                if values.len() != self.horizon {
                    return Err(Error::validation(format!(
                        "{what} profile of bus {bus} has {} hours, expected {}",
                        values.len(),
                        self.horizon
                    )));
                }
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::validation(format!(
                        "{what} on bus {bus} is non-negative"
                    )));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::validation("graph not connected"));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (a, b) = (self.index[&br.from_bus], self.index[&br.to_bus]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bus_index(&self, bus: BusId) -> Result<usize> {
        self.index.get(&bus).copied().ok_or(Error::UnknownBus(bus))
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id).collect()
    }

    /// Lowest-numbered bus; its angle is the reference.
    pub fn reference_bus(&self) -> BusId {
        self.buses.iter().map(|b| b.id).min().expect("non-empty")
    }

    pub fn demand(&self, bus: BusId, hour: usize) -> f64 {
        self.load.get(&bus).map_or(0.0, |v| v[hour])
    }

    pub fn renewable(&self, bus: BusId, hour: usize) -> f64 {
        self.renewables.get(&bus).map_or(0.0, |v| v[hour])
    }

    pub fn total_demand(&self, hour: usize) -> f64 {
        self.load.values().map(|v| v[hour]).sum()
    }

    pub fn total_renewable(&self, hour: usize) -> f64 {
        self.renewables.values().map(|v| v[hour]).sum()
    }

    /// Hour with the highest total demand (first one on ties).
    pub fn peak_hour(&self) -> usize {
        (0..self.horizon)
            .fold((0, f64::NEG_INFINITY), |(best, val), t| {
                let d = self.total_demand(t);
                if d > val {
                    (t, d)
                } else {
                    (best, val)
                }
            })
            .0
    }

    /// Generator buses in ascending bus order; the retained set for Kron reduction.
    pub fn generator_buses(&self) -> Vec<BusId> {
        let mut buses: Vec<BusId> = self.generators.iter().map(|g| g.bus).collect();
        buses.sort();
        buses.dedup();
        buses
    }

    /// Rescales the renewable profiles so that renewables at the peak-load hour equal
    /// `scale` times the peak load.
    pub fn with_penetration(&self, scale: f64) -> Result<GridCase> {
        if !(scale > 0.0) {
            return Err(Error::Config(format!(
                "penetration scale must be positive, got {scale}"
            )));
        }
        let peak = self.peak_hour();
        let current = self.total_renewable(peak);
        if current <= 0.0 {
            return Err(Error::Config(
                "case has no renewables at the peak hour to scale".into(),
            ));
        }
        let factor = scale * self.total_demand(peak) / current;
        let mut out = self.clone();
        for values in out.renewables.values_mut() {
            values.iter_mut().for_each(|v| *v *= factor);
        }
        Ok(out)
    }

    /// Keeps the first `hours` periods of every profile.
    pub fn truncate_horizon(&self, hours: usize) -> Result<GridCase> {
        if hours == 0 || hours > self.horizon {
            return Err(Error::Config(format!(
                "horizon must be within 1..={}, got {hours}",
                self.horizon
            )));
        }
        let mut out = self.clone();
        for values in out.load.values_mut().chain(out.renewables.values_mut()) {
            values.truncate(hours);
        }
        out.horizon = hours;
        Ok(out)
    }

    /// Selects a window of hours `[start, start + hours)`.
    pub fn window(&self, start: usize, hours: usize) -> Result<GridCase> {
        if hours == 0 || start + hours > self.horizon {
            return Err(Error::Config(format!(
                "window {start}..{} exceeds horizon {}",
                start + hours,
                self.horizon
            )));
        }
        let mut out = self.clone();
        for values in out.load.values_mut().chain(out.renewables.values_mut()) {
            *values = values[start..start + hours].to_vec();
        }
        out.horizon = hours;
        Ok(out)
    }
}
