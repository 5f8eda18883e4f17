//! Nodal frequency dynamics: closed-form modal expressions and a swing-equation integrator.

mod analytic;
mod swing;

pub use analytic::*;
pub use swing::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BusId;

/// Damping ratio, RoCoF window and measuring instants shared by the analytic model,
/// the surrogate fit and the scheduling constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams {
    /// Damping-to-inertia ratio `d_i / m_i` (1/s).
    pub gamma: f64,
    /// RoCoF measuring window (s).
    pub dt: f64,
    /// Measuring instant for buses local to the event (s).
    pub t1: f64,
    /// Measuring instant for non-local buses (s).
    pub t2: f64,
    /// Nominal frequency (Hz).
    pub f0: f64,
}

impl Default for DynamicParams {
    fn default() -> Self {
        Self {
            gamma: 0.7,
            dt: 0.1,
            t1: 0.0,
            t2: 0.4,
            f0: 60.0,
        }
    }
}

impl DynamicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::validation("gamma > 0"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::validation("RoCoF window dt > 0"));
        }
        if !(self.t1 >= 0.0 && self.t1 < self.t2) {
            return Err(Error::validation("0 <= t1 < t2"));
        }
        if !(self.f0 > 0.0) {
            return Err(Error::validation("f0 > 0"));
        }
        Ok(())
    }
}

/// Step loss of `power_loss` p.u. at `event_bus`, together with the average nodal inertia
/// coefficient that leaves with the tripped unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub event_bus: BusId,
    pub power_loss: f64,
    pub inertia_loss: f64,
}

impl Disturbance {
    pub fn new(event_bus: BusId, power_loss: f64, inertia_loss: f64) -> Result<Self> {
        let d = Self {
            event_bus,
            power_loss,
            inertia_loss,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power_loss > 0.0) {
            return Err(Error::validation("disturbance power loss > 0"));
        }
        if !(self.inertia_loss >= 0.0) {
            return Err(Error::validation("disturbance inertia loss >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        DynamicParams::default().validate().unwrap();
        let bad = DynamicParams {
            t1: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DynamicParams {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn disturbance_validation() {
        assert!(Disturbance::new(BusId(1), 0.0, 0.0).is_err());
        assert!(Disturbance::new(BusId(1), 0.1, -1.0).is_err());
        Disturbance::new(BusId(1), 0.1, 0.0).unwrap();
    }
}
