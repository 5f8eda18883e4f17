//! Nodal prices from the fixed-commitment dispatch LP and the resulting market settlement.

mod price;
mod settle;

pub use price::*;
pub use settle::*;
