//! Security-constrained unit commitment: the five model variants, their assembly into a
//! MILP, solving, and post-solve inspection.

mod build;
mod contingency;
mod inertia;
mod solve;
mod verify;

pub use build::*;
pub use contingency::*;
pub use inertia::*;
pub use solve::*;
pub use verify::*;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicParams;
use crate::error::{Error, Result};
use crate::lp::SolveOptions;
use crate::network::GridCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    /// Energy and reserve only.
    #[serde(rename = "t")]
    T,
    /// Adds a system-wide RoCoF limit per contingency.
    #[serde(rename = "erc")]
    Erc,
    /// Adds piecewise-linear locational RoCoF limits per contingency.
    #[serde(rename = "lrc")]
    Lrc,
    #[serde(rename = "vi-erc")]
    ViErc,
    #[serde(rename = "vi-lrc")]
    ViLrc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::T,
        ModelKind::Erc,
        ModelKind::Lrc,
        ModelKind::ViErc,
        ModelKind::ViLrc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::T => "t",
            ModelKind::Erc => "erc",
            ModelKind::Lrc => "lrc",
            ModelKind::ViErc => "vi-erc",
            ModelKind::ViLrc => "vi-lrc",
        }
    }

    /// Carries the system-inertia headroom constraint.
    pub fn is_erc(self) -> bool {
        matches!(self, ModelKind::Erc | ModelKind::ViErc)
    }

    /// Carries the locational surrogate constraints.
    pub fn is_lrc(self) -> bool {
        matches!(self, ModelKind::Lrc | ModelKind::ViLrc)
    }

    pub fn has_vi(self) -> bool {
        matches!(self, ModelKind::ViErc | ModelKind::ViLrc)
    }

    pub fn needs_surfaces(self) -> bool {
        self.is_lrc()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "t" => Ok(ModelKind::T),
            "erc" => Ok(ModelKind::Erc),
            "lrc" => Ok(ModelKind::Lrc),
            "vi-erc" => Ok(ModelKind::ViErc),
            "vi-lrc" => Ok(ModelKind::ViLrc),
            other => Err(Error::Config(format!(
                "unknown model kind `{other}` (expected t, erc, lrc, vi-erc, vi-lrc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScucConfig {
    /// Hz/s.
    pub rocof_lim: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t1: f64,
    pub t2: f64,
    /// Virtual-inertia price, $ per MWs per hour. `None` picks [`default_vi_price`].
    pub vi_price: Option<f64>,
    /// Virtual inertia available each hour, MWs.
    pub vi_budget: f64,
    pub mip_gap: f64,
    /// Seconds per model.
    pub time_limit: f64,
    pub threads: u32,
    pub seed: u64,
    /// Leave the tripped unit's own reserve out of the G-1 reserve sum.
    pub reserve_excludes_self: bool,
}

impl Default for ScucConfig {
    fn default() -> Self {
        Self {
            rocof_lim: 0.5,
            gamma: 0.7,
            dt: 0.1,
            t1: 0.0,
            t2: 0.4,
            vi_price: None,
            vi_budget: 2000.0,
            mip_gap: 1e-3,
            time_limit: 1800.0,
            threads: 1,
            seed: 0,
            reserve_excludes_self: false,
        }
    }
}

impl ScucConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rocof_lim > 0.0) {
            return Err(Error::Config(format!("rocof_lim must be positive, got {}", self.rocof_lim)));
        }
        if !(self.vi_budget >= 0.0) {
            return Err(Error::Config(format!("vi_budget must be >= 0, got {}", self.vi_budget)));
        }
        if let Some(p) = self.vi_price {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::Config(format!("vi_price must be >= 0, got {p}")));
            }
        }
        if !(self.mip_gap >= 0.0) || !(self.time_limit > 0.0) {
            return Err(Error::Config("mip_gap >= 0 and time_limit > 0".into()));
        }
        self.dynamics(60.0).validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn dynamics(&self, f0: f64) -> DynamicParams {
        DynamicParams {
            gamma: self.gamma,
            dt: self.dt,
            t1: self.t1,
            t2: self.t2,
            f0,
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            mip_gap: self.mip_gap,
            time_limit: self.time_limit,
            threads: self.threads,
            seed: self.seed,
        }
    }

    pub fn vi_price_for(&self, case: &GridCase) -> f64 {
        self.vi_price.unwrap_or_else(|| default_vi_price(case))
    }
}

/// Half of the cheapest no-load cost per MWs of stored energy in the fleet.
pub fn default_vi_price(case: &GridCase) -> f64 {
    0.5 * case
        .generators
        .iter()
        .filter(|g| g.kinetic_energy() > 0.0)
        .map(|g| g.no_load_cost / g.kinetic_energy())
        .fold(f64::INFINITY, f64::min)
        .min(1e9)
}
