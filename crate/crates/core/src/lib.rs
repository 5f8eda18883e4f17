//! Locational frequency-security toolkit for day-ahead unit commitment.
//!
//! The pipeline runs from a static grid case to priced schedules:
//!
//! 1. [`network`] loads a case, builds its susceptance Laplacian, Kron-reduces it to the
//!    generator buses and computes the eigenmodes (including the Fiedler mode) that drive
//!    locational frequency behaviour.
//! 2. [`dynamics`] evaluates nodal frequency deviation and windowed RoCoF from those modes
//!    and integrates the multi-machine swing equation for post-contingency validation.
//! 3. [`pwl`] samples the two-mode nodal RoCoF function and fits a max-of-affine surrogate.
//! 4. [`scuc`] assembles the five unit-commitment MILP variants and solves them through a
//!    [`lp::SolverBackend`].
//! 5. [`market`] fixes the commitment, re-solves the dispatch LP and settles the market on
//!    the resulting nodal prices.

pub mod dynamics;
pub mod error;
pub mod lp;
pub mod market;
pub mod network;
pub mod pwl;
pub mod scuc;
pub mod units;

pub use dynamics::{DynamicParams, Disturbance, SimulationOptions, SimulationResult};
pub use error::{Error, Result};
pub use lp::{HighsBackend, LinearProgram, SolverBackend};
pub use market::{PriceSet, Settlement};
pub use network::{
    BusClass, BusClassification, BusId, GridCase, ModalDecomposition, NetworkLaplacian,
    ReducedNetwork,
};
pub use pwl::{EvaluationGrid, FitProblem, PwlSurface, SurfaceSet};
pub use scuc::{ModelKind, ScucConfig, UcProblem, UcSolution};
