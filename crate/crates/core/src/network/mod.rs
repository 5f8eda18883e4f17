//! Grid case data, Laplacians, Kron reduction and modal analysis.

mod case;
mod laplacian;
mod modes;

pub use case::*;
pub use laplacian::*;
pub use modes::*;
