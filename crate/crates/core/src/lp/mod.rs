//! Solver-neutral linear/mixed-integer program, MPS exchange and solver backends.

mod backend;
mod model;
mod mps;

pub use backend::*;
pub use model::*;
pub use mps::*;
