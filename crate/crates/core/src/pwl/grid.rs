use serde::{Deserialize, Serialize};

use super::Sample;
use std::f64::consts::PI;

use crate::dynamics::{two_mode_value, DynamicParams};
use crate::error::{Error, Result};
use crate::network::{BusId, Generator, GridCase, ModalDecomposition};
use crate::units::inertia_coefficient;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Self { lo, hi, count }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(move |k| {
            if k + 1 == self.count {
                self.hi
            } else {
                self.lo + step * k as f64
            }
        })
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::validation(format!("{name} axis has lo < hi")));
        }
        if self.count < 2 {
            return Err(Error::validation(format!("{name} axis has at least 2 points")));
        }
        Ok(())
    }
}

/// Tensor grid over (dP p.u., m, dm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    pub delta_p: Axis,
    pub inertia: Axis,
    pub inertia_loss: Axis,
}

impl EvaluationGrid {
    pub fn validate(&self) -> Result<()> {
        self.delta_p.validate("dP")?;
        self.inertia.validate("m")?;
        self.inertia_loss.validate("dm")?;
        if !(self.inertia.lo > self.inertia_loss.hi) {
            return Err(Error::validation(
                "grid keeps post-contingency inertia positive (m_lo > dm_hi)",
            ));
        }
        if self.delta_p.lo < 0.0 || self.inertia_loss.lo < 0.0 {
            return Err(Error::validation("dP and dm axes are non-negative"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delta_p.count * self.inertia.count * self.inertia_loss.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.len());
        for p in self.delta_p.points() {
            for m in self.inertia.points() {
                for dm in self.inertia_loss.points() {
                    out.push([p, m, dm]);
                }
            }
        }
        out
    }

    /// Box bracketing the case's operating points: dP over `[0.2, 1.2]` of the largest
    /// rating, m over `[0.3, 1.2]` of the all-units-on average nodal inertia, dm up to the
    /// largest single-unit nodal inertia. `count` points per axis.
    pub fn for_case(case: &GridCase, retained_buses: usize, count: usize) -> Result<Self> {
        BoxSpec::with_points(count).grid(case, retained_buses, |_| true)
    }

    /// Like [`EvaluationGrid::for_case`] but with the dP and dm axes sized by the units
    /// connected at `bus`, the only ones whose loss the surface describes, and the inertia
    /// axis floored as in [`BoxSpec::phase_floor`].
    pub fn for_event_bus(
        case: &GridCase,
        bus: BusId,
        count: usize,
        modes: &ModalDecomposition,
        params: &DynamicParams,
    ) -> Result<Self> {
        BoxSpec::with_points(count).event_bus_grid(case, modes, params, bus)
    }
}

/// Sampling box as fractions of case quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxSpec {
    /// Fractions of the largest tripped rating.
    pub delta_p: (f64, f64),
    /// Fractions of the all-units-on average nodal inertia.
    pub inertia: (f64, f64),
    pub points_per_axis: usize,
    /// Raise the lower inertia edge of event-bus boxes so that, after the largest trip, the
    /// inter-area mode is still inside its first half-period at the non-local instant.
    pub phase_floor: bool,
}

impl Default for BoxSpec {
    fn default() -> Self {
        Self {
            delta_p: (0.2, 1.2),
            inertia: (0.3, 1.2),
            points_per_axis: 3,
            phase_floor: true,
        }
    }
}

impl BoxSpec {
    pub fn with_points(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            ..Default::default()
        }
    }

    /// Box for losses of units at `bus`.
    pub fn event_bus_grid(
        &self,
        case: &GridCase,
        modes: &ModalDecomposition,
        params: &DynamicParams,
        bus: BusId,
    ) -> Result<EvaluationGrid> {
        if !case.generators.iter().any(|g| g.bus == bus) {
            return Err(Error::validation(format!("bus {bus} hosts a generator")));
        }
        let mut grid = self.grid(case, modes.len(), |g| g.bus == bus)?;
        if self.phase_floor && params.t2 > 0.0 && modes.len() > 1 {
            let half_period = (PI / params.t2).powi(2) + params.gamma * params.gamma / 4.0;
            let floor = modes.eigenvalue(2) / half_period + grid.inertia_loss.hi;
            if floor > grid.inertia.lo {
                grid.inertia.lo = floor;
                grid.validate().map_err(|_| {
                    Error::validation(format!(
                        "inertia axis for bus {bus} is wider than its phase floor {floor:.4}"
                    ))
                })?;
            }
        }
        Ok(grid)
    }

    pub fn grid(
        &self,
        case: &GridCase,
        retained_buses: usize,
        tripped: impl Fn(&Generator) -> bool,
    ) -> Result<EvaluationGrid> {
        if case.generators.is_empty() || retained_buses == 0 {
            return Err(Error::validation("case has generators and retained buses"));
        }
        let n = retained_buses as f64;
        let coeff = |g: &Generator| inertia_coefficient(g.inertia_h, g.p_max, case.f0, case.base_mva);
        let all_on: f64 = case.generators.iter().map(coeff).sum::<f64>() / n;
        let units = || case.generators.iter().filter(|g| tripped(g));
        let p_max = units().map(|g| g.p_max).fold(0.0, f64::max) / case.base_mva;
        let largest = units().map(coeff).fold(0.0, f64::max) / n;
        let count = self.points_per_axis;
        let grid = EvaluationGrid {
            delta_p: Axis::new(self.delta_p.0 * p_max, self.delta_p.1 * p_max, count),
            inertia: Axis::new(self.inertia.0 * all_on, self.inertia.1 * all_on, count),
            inertia_loss: Axis::new(0.0, largest, count),
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Two-mode RoCoF for a given Fiedler coupling at every grid point.
#[allow(clippy::too_many_arguments)]
pub fn sample_coupling(
    coupling: f64,
    lambda2: f64,
    n: usize,
    t: f64,
    dt: f64,
    gamma: f64,
    grid: &EvaluationGrid,
) -> Result<Vec<Sample>> {
    grid.validate()?;
    grid.points()
        .into_iter()
        .map(|x| {
            let [p, m, dm] = x;
            let reject = |reason: String| Error::InvalidGridPoint {
                delta_p: p,
                inertia: m,
                inertia_loss: dm,
                reason,
            };
            if !(m > dm) {
                return Err(reject("post-contingency inertia is not positive".into()));
            }
            let value = two_mode_value(coupling, lambda2, n, m - dm, gamma, p, t, dt)
                .map_err(|e| reject(e.to_string()))?;
            Ok(Sample { x, value })
        })
        .collect()
}

/// Samples the constraint left side for bus position `n` and event bus position `b`.
pub fn sample_surface(
    modes: &ModalDecomposition,
    n: usize,
    b: usize,
    t: f64,
    dt: f64,
    gamma: f64,
    grid: &EvaluationGrid,
) -> Result<Vec<Sample>> {
    if modes.len() < 2 {
        return Err(Error::validation("network has a Fiedler mode"));
    }
    sample_coupling(
        modes.coupling(2, n, b),
        modes.eigenvalue(2),
        modes.len(),
        t,
        dt,
        gamma,
        grid,
    )
}
