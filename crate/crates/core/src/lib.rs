//! Exact and numerical bookkeeping for H-flux on product backgrounds
//! `Σ_g × N × T^k`: the flux stratum invariant, Buscher duality, dimensional
//! reduction and a holonomy lab for the torsionful connection.

pub mod background;
pub mod buscher;
pub mod chart;
pub mod cohomology;
pub mod error;
pub mod field;
pub mod holonomy;
pub mod rational;
pub mod reduction;
pub mod scenario;
pub mod tolerance;

pub use error::{Error, Result};
